#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vsem/dsm.hpp"
#include "vsem/experiment.hpp"

namespace vsem::eval {

struct Prediction {
    std::string sample_id;
    std::string gold;  // class-space id: target word (vector mode) or label (flat mode)
    std::vector<std::pair<std::string, double>> topk;  // scores non-increasing
    bool undecodable = false;  // zero prediction vector; counts as a miss
};

struct PerClassMetrics {
    double precision = 0, recall = 0, f1 = 0;
    std::int64_t support = 0;
    bool no_predictions = false;  // precision forced to 0
};

struct MetricsReport {
    std::string mode;
    double top1_accuracy = 0;
    double top1_precision = 0;  // macro
    double top1_recall = 0;     // macro
    double top1_f1 = 0;         // macro
    double top5_tpr = 0;
    double top5_fpr = 0;  // computed as 1 - top5_tpr
    std::map<std::string, PerClassMetrics> per_class;
    std::int64_t samples = 0;
};

struct DecodeResult {
    std::vector<std::pair<std::string, double>> topk;
    bool undecodable = false;
};

// cosine nearest neighbors of a predicted vector, optionally restricted to a
// candidate word set; a zero vector decodes to nothing instead of failing
DecodeResult decode_prediction(std::span<const float> vec, const dsm::EmbeddingModel& model,
                               std::int64_t k,
                               const std::vector<std::string>* restrict_words = nullptr);

// fraction of samples whose gold id appears among the first k entries
double topk_hit_rate(const std::vector<Prediction>& predictions, std::int64_t k);

struct Top1Summary {
    double accuracy = 0;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    std::map<std::string, PerClassMetrics> per_class;
};

// micro accuracy plus per-class one-vs-rest precision/recall/F1 macro-averaged
// over `classes`; classes that were never predicted contribute precision 0.
Top1Summary top1_metrics(const std::vector<Prediction>& predictions,
                         const std::vector<std::string>& classes);

struct ModeEvaluation {
    std::string mode;  // "vector" or "flat"
    std::vector<MetricsReport> per_fold;
    MetricsReport mean;
    // open-vocabulary top-k predictions per fold, for the neighbor report
    std::vector<std::vector<Prediction>> fold_predictions;
};

// metrics.json, metrics.csv (rows: metric,vector,flat) and neighbors.txt
void emit_reports(const std::vector<ModeEvaluation>& modes, const std::string& out_dir,
                  std::int64_t k);

MetricsReport mean_report(const std::vector<MetricsReport>& reports);

// Runs one fold's trained network over the evaluation split and assembles its
// MetricsReport. Vector mode decodes the regressed vectors: unrestricted for
// the top-k hit rate and neighbor listing, label-restricted for the top-1
// metrics (configurable).
struct EvalOptions {
    std::int64_t k = 5;
    bool restrict_top1 = true;
};

struct FoldEvaluation {
    MetricsReport report;
    std::vector<Prediction> open_predictions;
};

FoldEvaluation evaluate_fold(net::TrainState<float>& state, const exp::DatasetManifest& manifest,
                             const std::vector<Tensor<float>>& images,
                             const std::vector<std::int64_t>& eval_indices, exp::Mode mode,
                             const dsm::EmbeddingModel* model,
                             const std::map<std::string, std::string>& label_map,
                             const EvalOptions& options);

}  // namespace vsem::eval
