#include "vsem/dsm.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vsem::dsm {

void SkipgramConfig::validate() const {
    if (dim < 1) throw ValidationError("dsm: dim must be >= 1");
    if (window < 1) throw ValidationError("dsm: window must be >= 1");
    if (min_count < 1) throw ValidationError("dsm: min_count must be >= 1");
    if (negatives < 0) throw ValidationError("dsm: negatives must be >= 0");
    if (epochs < 1) throw ValidationError("dsm: epochs must be >= 1");
    if (!(initial_lr > 0)) throw ValidationError("dsm: initial_lr must be > 0");
    if (noise_exponent < 0) throw ValidationError("dsm: noise_exponent must be >= 0");
    if (subsample_threshold < 0) throw ValidationError("dsm: subsample_threshold must be >= 0");
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       std::uint64_t min_count) {
    if (min_count < 1) throw ValidationError("build_vocab: min_count must be >= 1");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& sent : sentences)
        for (const auto& tok : sent) ++counts[tok];

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [tok, c] : counts)
        if (c >= min_count) kept.emplace_back(tok, c);
    if (kept.empty()) throw ValidationError("build_vocab: no token reaches min_count " +
                                            std::to_string(min_count));
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.min_count = min_count;
    v.words.reserve(kept.size());
    v.freq.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        v.words.push_back(kept[i].first);
        v.freq.push_back(kept[i].second);
        v.index.emplace(kept[i].first, static_cast<std::int64_t>(i));
    }
    return v;
}

namespace {

// cumulative noise distribution, freq^exponent
std::vector<double> noise_cdf(const Vocabulary& vocab, double exponent) {
    std::vector<double> cdf(vocab.words.size());
    double acc = 0;
    for (std::size_t i = 0; i < vocab.freq.size(); ++i) {
        acc += std::pow(static_cast<double>(vocab.freq[i]), exponent);
        cdf[i] = acc;
    }
    return cdf;
}

std::int64_t sample_noise(const std::vector<double>& cdf, Rng& rng) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<std::int64_t>(it - cdf.begin());
}

// word2vec-style keep probability for frequent-word subsampling
double keep_prob(std::uint64_t count, double threshold, std::uint64_t total) {
    const double f = static_cast<double>(count);
    const double tn = threshold * static_cast<double>(total);
    return (std::sqrt(f / tn) + 1.0) * tn / f;
}

struct TraversalCounts {
    std::uint64_t pairs = 0;
};

// Walks the corpus exactly as the training pass does, consuming the same
// draws from `traverse`, and counts (center, context) pairs. Running it on a
// copy of the traversal RNG gives the exact pair total the linear learning
// rate schedule needs.
template <typename PairFn>
void traverse_corpus(const std::vector<std::vector<std::int64_t>>& corpus,
                     const Vocabulary& vocab, const SkipgramConfig& cfg, std::uint64_t total_tokens,
                     std::int64_t epochs, Rng& traverse, PairFn&& on_pair) {
    std::vector<std::int64_t> kept;
    for (std::int64_t e = 0; e < epochs; ++e) {
        for (const auto& sent : corpus) {
            const std::vector<std::int64_t>* active = &sent;
            if (cfg.subsample_threshold > 0) {
                kept.clear();
                for (std::int64_t w : sent) {
                    const double p =
                        keep_prob(vocab.freq[static_cast<std::size_t>(w)],
                                  cfg.subsample_threshold, total_tokens);
                    const double u = traverse.uniform();
                    if (p >= u) kept.push_back(w);
                }
                active = &kept;
            }
            const std::int64_t n = static_cast<std::int64_t>(active->size());
            for (std::int64_t i = 0; i < n; ++i) {
                const std::int64_t b =
                    1 + static_cast<std::int64_t>(traverse.below(static_cast<std::uint64_t>(cfg.window)));
                const std::int64_t lo = std::max<std::int64_t>(0, i - b);
                const std::int64_t hi = std::min<std::int64_t>(n - 1, i + b);
                for (std::int64_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    on_pair((*active)[static_cast<std::size_t>(i)],
                            (*active)[static_cast<std::size_t>(j)]);
                }
            }
        }
    }
}

}  // namespace

EmbeddingModel train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipgramConfig& config) {
    config.validate();
    Vocabulary vocab = build_vocab(sentences, config.min_count);

    std::vector<std::vector<std::int64_t>> corpus;
    std::uint64_t total_tokens = 0;
    for (const auto& sent : sentences) {
        std::vector<std::int64_t> ids;
        ids.reserve(sent.size());
        for (const auto& tok : sent) {
            auto idx = vocab.lookup(tok);
            if (idx) ids.push_back(*idx);  // OOV tokens skipped
        }
        total_tokens += ids.size();
        if (!ids.empty()) corpus.push_back(std::move(ids));
    }
    if (corpus.empty()) throw ValidationError("train_skipgram: effective corpus is empty");

    EmbeddingModel model;
    model.vocab = std::move(vocab);
    model.dim = config.dim;
    model.config = config;
    const std::int64_t V = model.vocab.size();
    const std::int64_t D = config.dim;
    model.input_vectors.resize(static_cast<std::size_t>(V * D));
    model.output_vectors.assign(static_cast<std::size_t>(V * D), 0.0f);
    Rng init(derive_seed(config.seed, 0));
    for (auto& x : model.input_vectors)
        x = static_cast<float>((init.uniform() - 0.5) / static_cast<double>(D));

    const std::vector<double> cdf = noise_cdf(model.vocab, config.noise_exponent);
    const double lr0 = config.initial_lr;
    const double lr_end = lr0 * 1e-4;
    float* in = model.input_vectors.data();
    float* out = model.output_vectors.data();

    if (!config.parallel) {
        Rng traverse(derive_seed(config.seed, 1));
        Rng negrng(derive_seed(config.seed, 2));

        Rng counter_rng = traverse;  // replay the same draws
        std::uint64_t total_pairs = 0;
        traverse_corpus(corpus, model.vocab, config, total_tokens, config.epochs, counter_rng,
                        [&](std::int64_t, std::int64_t) { ++total_pairs; });

        std::uint64_t t = 0;
        std::vector<float*> negs(static_cast<std::size_t>(config.negatives));
        traverse_corpus(corpus, model.vocab, config, total_tokens, config.epochs, traverse,
                        [&](std::int64_t center, std::int64_t context) {
                            const double frac =
                                total_pairs > 1
                                    ? static_cast<double>(t) / static_cast<double>(total_pairs - 1)
                                    : 0.0;
                            const double lr = lr0 + (lr_end - lr0) * frac;
                            for (auto& n : negs)
                                n = out + sample_noise(cdf, negrng) * D;
                            sgns_pair_step(in + center * D, out + context * D, negs, D, lr);
                            ++t;
                        });
    } else {
        // Hogwild over sentence shards: worker threads update the shared
        // tables without locks, so results vary run to run. The lr schedule
        // uses the expected pair count; each thread walks its own shard with
        // its own RNG streams.
        const std::uint64_t expected_pairs = static_cast<std::uint64_t>(
            static_cast<double>(config.epochs) * static_cast<double>(total_tokens) *
            static_cast<double>(config.window + 1));
        std::atomic<std::uint64_t> t{0};
#pragma omp parallel
        {
#ifdef _OPENMP
            const int tid = omp_get_thread_num();
            const int nthreads = omp_get_num_threads();
#else
            const int tid = 0;
            const int nthreads = 1;
#endif
            Rng traverse(derive_seed(config.seed, 100 + static_cast<std::uint64_t>(tid)));
            Rng negrng(derive_seed(config.seed, 200 + static_cast<std::uint64_t>(tid)));
            std::vector<std::vector<std::int64_t>> shard;
            for (std::size_t s = static_cast<std::size_t>(tid); s < corpus.size();
                 s += static_cast<std::size_t>(nthreads))
                shard.push_back(corpus[s]);
            std::vector<float*> negs(static_cast<std::size_t>(config.negatives));
            traverse_corpus(shard, model.vocab, config, total_tokens, config.epochs, traverse,
                            [&](std::int64_t center, std::int64_t context) {
                                const std::uint64_t step = t.fetch_add(1, std::memory_order_relaxed);
                                double frac = static_cast<double>(step) /
                                              static_cast<double>(expected_pairs);
                                if (frac > 1.0) frac = 1.0;
                                const double lr = lr0 + (lr_end - lr0) * frac;
                                for (auto& n : negs)
                                    n = out + sample_noise(cdf, negrng) * D;
                                sgns_pair_step(in + center * D, out + context * D, negs, D, lr);
                            });
        }
    }

    for (float x : model.input_vectors)
        if (!std::isfinite(x)) throw NumericError("train_skipgram: non-finite input vector");
    for (float x : model.output_vectors)
        if (!std::isfinite(x)) throw NumericError("train_skipgram: non-finite output vector");
    return model;
}

std::vector<float> embed(const EmbeddingModel& model, const std::string& word) {
    auto idx = model.vocab.lookup(word);
    if (!idx) throw OovError("word '" + word + "' not in vocabulary");
    const float* row = model.input_row(*idx);
    return std::vector<float>(row, row + model.dim);
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
    return cosine(a.data(), b.data(), static_cast<std::int64_t>(a.size()));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
    return cosine(a.data(), b.data(), static_cast<std::int64_t>(a.size()));
}

NeighborQuery nearest_neighbors(const EmbeddingModel& model, std::span<const float> query,
                                std::int64_t k, const std::vector<std::string>* restrict_words) {
    if (k < 1) throw ValidationError("nearest_neighbors: k must be >= 1");
    if (static_cast<std::int64_t>(query.size()) != model.dim)
        throw ValidationError("nearest_neighbors: query dimension " +
                              std::to_string(query.size()) + " != model dimension " +
                              std::to_string(model.dim));
    double qnorm = 0;
    for (float x : query) qnorm += static_cast<double>(x) * static_cast<double>(x);
    if (qnorm == 0.0) throw ValidationError("nearest_neighbors: zero query vector");

    NeighborQuery result;
    std::vector<std::int64_t> candidates;
    if (restrict_words) {
        for (const auto& w : *restrict_words) {
            auto idx = model.vocab.lookup(w);
            if (idx)
                candidates.push_back(*idx);
            else
                result.unknown_restrict.push_back(w);
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    } else {
        candidates.resize(static_cast<std::size_t>(model.vocab.size()));
        for (std::size_t i = 0; i < candidates.size(); ++i)
            candidates[i] = static_cast<std::int64_t>(i);
    }

    std::vector<std::pair<double, std::int64_t>> scored;
    scored.reserve(candidates.size());
    for (std::int64_t c : candidates) {
        const float* row = model.input_row(c);
        double rnorm = 0;
        for (std::int64_t i = 0; i < model.dim; ++i)
            rnorm += static_cast<double>(row[i]) * static_cast<double>(row[i]);
        if (rnorm == 0.0) continue;  // zero rows cannot be ranked by cosine
        scored.emplace_back(cosine(query.data(), row, model.dim), c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    result.items.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        result.items.push_back(
            {model.vocab.words[static_cast<std::size_t>(scored[i].second)], scored[i].first});
    return result;
}

namespace {

void write_vector_row(std::FILE* f, const std::string& token, const float* row, std::int64_t dim) {
    std::fputs(token.c_str(), f);
    char buf[32];
    for (std::int64_t i = 0; i < dim; ++i) {
        std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(row[i]));
        std::fputs(buf, f);
    }
    std::fputc('\n', f);
}

struct LineReader {
    std::ifstream in;
    std::size_t lineno = 0;
    std::string path;

    bool next(std::string& line) {
        if (!std::getline(in, line)) return false;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(path + ":" + std::to_string(lineno) + ": " + msg);
    }
};

void parse_vector_rows(LineReader& r, const char* section, std::int64_t V, std::int64_t dim,
                       std::vector<std::string>* tokens_out,
                       const std::vector<std::string>* tokens_expected, std::vector<float>& dest) {
    std::string line;
    for (std::int64_t i = 0; i < V; ++i) {
        if (!r.next(line))
            r.fail(std::string("expected ") + std::to_string(V) + " " + section + " rows, got " +
                   std::to_string(i));
        auto cols = split_whitespace(line);
        if (static_cast<std::int64_t>(cols.size()) != dim + 1)
            r.fail(std::string(section) + " row has " + std::to_string(cols.size() - 1) +
                   " values, expected " + std::to_string(dim));
        if (tokens_expected && cols[0] != (*tokens_expected)[static_cast<std::size_t>(i)])
            r.fail(std::string(section) + " row token \"" + cols[0] + "\" does not match \"" +
                   (*tokens_expected)[static_cast<std::size_t>(i)] + "\"");
        if (tokens_out) tokens_out->push_back(cols[0]);
        for (std::int64_t d = 0; d < dim; ++d) {
            char* end = nullptr;
            const float x = std::strtof(cols[static_cast<std::size_t>(d + 1)].c_str(), &end);
            if (end == nullptr || *end != '\0')
                r.fail("cannot parse value \"" + cols[static_cast<std::size_t>(d + 1)] + "\"");
            if (!std::isfinite(x))
                r.fail("non-finite value \"" + cols[static_cast<std::size_t>(d + 1)] + "\"");
            dest[static_cast<std::size_t>(i * dim + d)] = x;
        }
    }
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write model file: " + path);
    const std::int64_t V = model.vocab.size();
    std::fprintf(f, "%lld %lld\n", static_cast<long long>(V), static_cast<long long>(model.dim));
    for (std::int64_t i = 0; i < V; ++i)
        write_vector_row(f, model.vocab.words[static_cast<std::size_t>(i)], model.input_row(i),
                         model.dim);
    std::fputs("#context\n", f);
    for (std::int64_t i = 0; i < V; ++i)
        write_vector_row(f, model.vocab.words[static_cast<std::size_t>(i)], model.output_row(i),
                         model.dim);
    std::fputs("#vocab\n", f);
    for (std::int64_t i = 0; i < V; ++i)
        std::fprintf(f, "%s %llu\n", model.vocab.words[static_cast<std::size_t>(i)].c_str(),
                     static_cast<unsigned long long>(model.vocab.freq[static_cast<std::size_t>(i)]));
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

EmbeddingModel load_model(const std::string& path) {
    LineReader r;
    r.path = path;
    r.in.open(path);
    if (!r.in) throw IoError("cannot open model file: " + path);

    std::string line;
    if (!r.next(line)) r.fail("empty file");
    long long V = 0, dim = 0;
    {
        std::istringstream ss(line);
        std::string extra;
        if (!(ss >> V >> dim) || (ss >> extra) || V < 1 || dim < 1)
            r.fail("malformed header (expected \"V dim\"): \"" + line + "\"");
    }

    EmbeddingModel model;
    model.dim = dim;
    model.config.dim = dim;  // the file format does not persist training settings
    model.input_vectors.resize(static_cast<std::size_t>(V * dim));
    model.output_vectors.resize(static_cast<std::size_t>(V * dim));

    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(V));
    parse_vector_rows(r, "input", V, dim, &tokens, nullptr, model.input_vectors);

    if (!r.next(line) || line != "#context") r.fail("expected '#context' marker");
    parse_vector_rows(r, "context", V, dim, nullptr, &tokens, model.output_vectors);

    if (!r.next(line) || line != "#vocab") r.fail("expected '#vocab' marker");
    model.vocab.min_count = 1;
    model.vocab.words = tokens;
    model.vocab.freq.resize(static_cast<std::size_t>(V));
    for (long long i = 0; i < V; ++i) {
        if (!r.next(line)) r.fail("expected " + std::to_string(V) + " vocab rows");
        auto cols = split_whitespace(line);
        if (cols.size() != 2) r.fail("malformed vocab row: \"" + line + "\"");
        if (cols[0] != tokens[static_cast<std::size_t>(i)])
            r.fail("vocab row token \"" + cols[0] + "\" does not match \"" +
                   tokens[static_cast<std::size_t>(i)] + "\"");
        char* end = nullptr;
        const unsigned long long c = std::strtoull(cols[1].c_str(), &end, 10);
        if (end == nullptr || *end != '\0') r.fail("cannot parse count \"" + cols[1] + "\"");
        model.vocab.freq[static_cast<std::size_t>(i)] = c;
        model.vocab.index.emplace(tokens[static_cast<std::size_t>(i)], i);
    }
    if (model.vocab.index.size() != tokens.size()) r.fail("duplicate token in model file");
    return model;
}

}  // namespace vsem::dsm
