#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vsem/common.hpp"

namespace vsem::dsm {

struct Vocabulary {
    std::vector<std::string> words;  // index -> token, ordered by descending frequency
    std::unordered_map<std::string, std::int64_t> index;
    std::vector<std::uint64_t> freq;
    std::uint64_t min_count = 1;

    std::int64_t size() const { return static_cast<std::int64_t>(words.size()); }
    std::optional<std::int64_t> lookup(const std::string& w) const {
        auto it = index.find(w);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

struct SkipgramConfig {
    std::int64_t dim = 50;
    std::int64_t window = 10;
    std::uint64_t min_count = 5;
    std::int64_t negatives = 5;
    std::int64_t epochs = 5;
    double initial_lr = 0.025;
    double noise_exponent = 0.75;
    double subsample_threshold = 0.0;  // 0 disables frequent-word subsampling
    std::uint64_t seed = 1;
    bool parallel = false;  // hogwild over sentence shards; NOT deterministic

    void validate() const;
};

struct EmbeddingModel {
    Vocabulary vocab;
    std::int64_t dim = 0;
    std::vector<float> input_vectors;   // V x dim, the queried word vectors
    std::vector<float> output_vectors;  // V x dim, context vectors
    SkipgramConfig config;

    const float* input_row(std::int64_t i) const { return &input_vectors[static_cast<std::size_t>(i * dim)]; }
    const float* output_row(std::int64_t i) const { return &output_vectors[static_cast<std::size_t>(i * dim)]; }
};

// Tokens below min_count are dropped; indices are assigned by descending
// frequency, ties broken lexicographically. Throws if nothing survives.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       std::uint64_t min_count);

EmbeddingModel train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipgramConfig& config);

std::vector<float> embed(const EmbeddingModel& model, const std::string& word);

// a.b / (|a||b|) accumulated in double, clamped to [-1,1].
template <typename T>
double cosine(const T* a, const T* b, std::int64_t dim) {
    double dot = 0, na = 0, nb = 0;
    for (std::int64_t i = 0; i < dim; ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine: zero vector");
    double r = dot / (std::sqrt(na) * std::sqrt(nb));
    if (r > 1.0) r = 1.0;
    if (r < -1.0) r = -1.0;
    return r;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct Neighbor {
    std::string word;
    double score;
};

struct NeighborQuery {
    std::vector<Neighbor> items;                 // descending cosine, ties by vocab index
    std::vector<std::string> unknown_restrict;   // restrict words missing from the vocabulary
};

// Exact scan over the candidate set (whole vocabulary or `restrict`).
NeighborQuery nearest_neighbors(const EmbeddingModel& model, std::span<const float> query,
                                std::int64_t k,
                                const std::vector<std::string>* restrict_words = nullptr);

void save_model(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_model(const std::string& path);

// --- skipgram objective for one (center, context, negatives) triple -------
// loss = -log s(u_o.v_c) - sum_i log s(-u_ni.v_c), s = logistic sigmoid.
// Exposed so the gradients can be finite-difference checked in double
// precision independently of the training loop.

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename T>
double sgns_pair_loss(const T* v_c, const T* u_o, const std::vector<const T*>& negs,
                      std::int64_t dim) {
    auto dot = [dim](const T* a, const T* b) {
        double s = 0;
        for (std::int64_t i = 0; i < dim; ++i)
            s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        return s;
    };
    double loss = -std::log(sigmoid(dot(u_o, v_c)));
    for (const T* u_n : negs) loss += -std::log(sigmoid(-dot(u_n, v_c)));
    return loss;
}

// d loss / d v_c = (s(u_o.v_c)-1) u_o + sum_i s(u_ni.v_c) u_ni
// d loss / d u_o = (s(u_o.v_c)-1) v_c ;  d loss / d u_ni = s(u_ni.v_c) v_c
template <typename T>
void sgns_pair_grads(const T* v_c, const T* u_o, const std::vector<const T*>& negs,
                     std::int64_t dim, std::vector<double>& d_vc, std::vector<double>& d_uo,
                     std::vector<std::vector<double>>& d_negs) {
    auto dot = [dim](const T* a, const T* b) {
        double s = 0;
        for (std::int64_t i = 0; i < dim; ++i)
            s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        return s;
    };
    d_vc.assign(static_cast<std::size_t>(dim), 0.0);
    d_uo.assign(static_cast<std::size_t>(dim), 0.0);
    d_negs.assign(negs.size(), std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    const double g_pos = sigmoid(dot(u_o, v_c)) - 1.0;
    for (std::int64_t i = 0; i < dim; ++i) {
        d_vc[static_cast<std::size_t>(i)] += g_pos * static_cast<double>(u_o[i]);
        d_uo[static_cast<std::size_t>(i)] = g_pos * static_cast<double>(v_c[i]);
    }
    for (std::size_t j = 0; j < negs.size(); ++j) {
        const double g = sigmoid(dot(negs[j], v_c));
        for (std::int64_t i = 0; i < dim; ++i) {
            d_vc[static_cast<std::size_t>(i)] += g * static_cast<double>(negs[j][i]);
            d_negs[j][static_cast<std::size_t>(i)] = g * static_cast<double>(v_c[i]);
        }
    }
}

// One plain SGD step on a pair; all updates use the pre-step v_c.
template <typename T>
void sgns_pair_step(T* v_c, T* u_o, const std::vector<T*>& negs, std::int64_t dim, double lr) {
    auto dot = [dim](const T* a, const T* b) {
        double s = 0;
        for (std::int64_t i = 0; i < dim; ++i)
            s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        return s;
    };
    std::vector<double> d_vc(static_cast<std::size_t>(dim), 0.0);
    const double g_pos = sigmoid(dot(u_o, v_c)) - 1.0;
    for (std::int64_t i = 0; i < dim; ++i) {
        d_vc[static_cast<std::size_t>(i)] += g_pos * static_cast<double>(u_o[i]);
        u_o[i] = static_cast<T>(static_cast<double>(u_o[i]) - lr * g_pos * static_cast<double>(v_c[i]));
    }
    for (T* u_n : negs) {
        const double g = sigmoid(dot(u_n, v_c));
        for (std::int64_t i = 0; i < dim; ++i) {
            d_vc[static_cast<std::size_t>(i)] += g * static_cast<double>(u_n[i]);
            u_n[i] = static_cast<T>(static_cast<double>(u_n[i]) - lr * g * static_cast<double>(v_c[i]));
        }
    }
    for (std::int64_t i = 0; i < dim; ++i)
        v_c[i] = static_cast<T>(static_cast<double>(v_c[i]) - lr * d_vc[static_cast<std::size_t>(i)]);
}

}  // namespace vsem::dsm
