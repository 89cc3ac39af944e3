#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "vsem/dsm.hpp"
#include "vsem/network.hpp"
#include "vsem/tensor.hpp"

namespace vsem::exp {

struct ManifestEntry {
    std::string image_path;  // as written in the CSV
    std::string label;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> classes;  // sorted unique labels
    std::map<std::string, std::int64_t> class_count;
    std::string base_dir;  // directory of the CSV; relative paths resolve against it

    std::string resolved_path(std::size_t i) const;
};

// CSV with header `path,label`; every referenced file must exist.
DatasetManifest load_manifest(const std::string& path);

constexpr int kNumFolds = 5;
constexpr double kEvalFraction = 0.2;

struct FoldSplit {
    std::vector<std::int64_t> train, test;
};

// 20% stratified eval holdout (round(0.2*n_c) per class), then 5-fold
// cross-validation over the remainder, stratified per class.
struct SplitPlan {
    std::vector<std::int64_t> eval;
    std::vector<FoldSplit> folds;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;  // e.g. classes too small to stratify
};

SplitPlan make_splits(const DatasetManifest& manifest, std::uint64_t seed);

// w_c = N / (K * n_c); mean weight 1 on balanced data, rarer class => larger.
using ClassWeightTable = std::map<std::string, double>;
ClassWeightTable compute_class_weights(const DatasetManifest& manifest);

// (N, dim) regression targets: row i = embedding of label_map[label_i].
// Labels whose target word is missing from the model are all reported in one
// error.
Tensor<float> annotate_vectors(const DatasetManifest& manifest, const dsm::EmbeddingModel& model,
                               const std::map<std::string, std::string>& label_map);

// CSV `label,target_word`
std::map<std::string, std::string> load_label_map(const std::string& path);

enum class Mode { Vector, Flat };

struct TrainRunConfig {
    Mode mode = Mode::Vector;
    std::map<std::string, std::string> label_map;  // required in vector mode
    std::int64_t image_size = 64;
    std::vector<std::int64_t> conv_filters{32, 64, 64};
    std::int64_t dense_units = 256;
    double conv_dropout = 0.25;
    double dense_dropout = 0.5;
    std::int64_t batch_size = 32;
    std::int64_t max_epochs = 200;
    double learning_rate = 1e-3;
    double rho = 0.9;
    double epsilon = 1e-7;
    std::int64_t patience = 10;
    double min_delta = 1e-4;
    std::uint64_t seed = 1;

    void validate() const;
};

// Stops once the monitored loss has not improved by more than min_delta for
// `patience` consecutive epochs. Snapshots track the absolute best epoch, so
// the restored weights are never worse than any observed epoch's loss even
// when the improvement was below min_delta.
struct EarlyStopper {
    std::int64_t patience;
    double min_delta;
    double best = std::numeric_limits<double>::infinity();  // absolute best, restore target
    std::int64_t best_epoch = -1;
    double best_improved = std::numeric_limits<double>::infinity();  // patience reference
    std::int64_t bad = 0;

    // true if the caller should snapshot this epoch's weights
    bool observe(std::int64_t epoch, double loss) {
        const bool snapshot = loss < best;
        if (snapshot) {
            best = loss;
            best_epoch = epoch;
        }
        if (loss < best_improved - min_delta) {
            best_improved = loss;
            bad = 0;
        } else {
            ++bad;
        }
        return snapshot;
    }
    bool should_stop() const { return bad >= patience; }
};

struct EpochRecord {
    std::int64_t fold = 0, epoch = 0;
    double train_loss = 0, test_loss = 0;
};

struct FoldOutcome {
    std::int64_t fold = 0;
    bool ok = false;
    std::string error;
    std::vector<EpochRecord> history;
    std::int64_t best_epoch = -1;
    double best_test_loss = 0;
    std::string checkpoint_path;
};

struct TrainRunResult {
    std::vector<FoldOutcome> folds;
    std::vector<std::string> classes;
};

// decoded + resized once, indexed like manifest.entries
std::vector<Tensor<float>> load_images(const DatasetManifest& manifest, std::int64_t image_size);

// Trains one network per fold with per-epoch shuffling and early stopping on
// the fold-test loss, restoring the best-epoch weights. Writes fold{i}.ckpt
// and history.jsonl under out_dir. A numeric failure aborts that fold only.
TrainRunResult run_training(const DatasetManifest& manifest, const SplitPlan& plan,
                            const TrainRunConfig& config, const dsm::EmbeddingModel* model,
                            const std::string& out_dir);

// same, reusing an existing image cache (compare runs two modes on one corpus)
TrainRunResult run_training_cached(const DatasetManifest& manifest, const SplitPlan& plan,
                                   const TrainRunConfig& config, const dsm::EmbeddingModel* model,
                                   const std::vector<Tensor<float>>& images,
                                   const std::string& out_dir);

net::NetworkSpec network_for(const TrainRunConfig& config, std::int64_t head_dim, Mode mode);

}  // namespace vsem::exp
