#pragma once

#include <cstdint>
#include <string>

#include "vsem/dsm.hpp"
#include "vsem/experiment.hpp"

namespace vsem::cfg {

// Strict JSON run configuration: unknown keys are rejected, values are
// range-checked against the module invariants before anything runs.
struct RunConfig {
    std::uint64_t seed = 42;
    struct Textprep {
        bool numbers_to_sentinel = true;
    } textprep;
    dsm::SkipgramConfig dsm;
    struct Network {
        std::int64_t image_size = 64;
        std::vector<std::int64_t> conv_filters{32, 64, 64};
        std::int64_t dense_units = 256;
        double conv_dropout = 0.25;
        double dense_dropout = 0.5;
    } network;
    struct Training {
        std::int64_t batch_size = 32;
        std::int64_t max_epochs = 200;
        double learning_rate = 1e-3;
        double rho = 0.9;
        double epsilon = 1e-7;
        std::int64_t patience = 10;
        double min_delta = 1e-4;
    } training;
    struct Evaluation {
        std::int64_t k = 5;
        bool restrict_top1 = true;
    } evaluation;

    void validate() const;

    // merged module configs, global seed applied
    exp::TrainRunConfig train_config(exp::Mode mode) const;
    dsm::SkipgramConfig dsm_config() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);

}  // namespace vsem::cfg
