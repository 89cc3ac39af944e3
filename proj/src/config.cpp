#include "vsem/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vsem::cfg {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("config: unknown key \"" + where + it.key() + "\"");
}

template <typename T>
void get_to(const json& obj, const char* key, T& dest) {
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(dest);
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: bad value for \"") + key + "\"");
    }
}

}  // namespace

void RunConfig::validate() const {
    dsm.validate();
    train_config(exp::Mode::Flat).validate();
    if (evaluation.k < 1) throw ValidationError("evaluation: k must be >= 1");
}

exp::TrainRunConfig RunConfig::train_config(exp::Mode mode) const {
    exp::TrainRunConfig tc;
    tc.mode = mode;
    tc.image_size = network.image_size;
    tc.conv_filters = network.conv_filters;
    tc.dense_units = network.dense_units;
    tc.conv_dropout = network.conv_dropout;
    tc.dense_dropout = network.dense_dropout;
    tc.batch_size = training.batch_size;
    tc.max_epochs = training.max_epochs;
    tc.learning_rate = training.learning_rate;
    tc.rho = training.rho;
    tc.epsilon = training.epsilon;
    tc.patience = training.patience;
    tc.min_delta = training.min_delta;
    tc.seed = seed;
    return tc;
}

dsm::SkipgramConfig RunConfig::dsm_config() const {
    dsm::SkipgramConfig c = dsm;
    c.seed = seed;
    return c;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(origin + ": invalid JSON: " + e.what());
    }
    if (!root.is_object()) throw ValidationError(origin + ": config root must be an object");

    RunConfig cfg;
    check_keys(root, {"seed", "textprep", "dsm", "network", "training", "evaluation"}, "");
    get_to(root, "seed", cfg.seed);

    if (root.contains("textprep")) {
        const auto& t = root.at("textprep");
        check_keys(t, {"numbers_to_sentinel"}, "textprep.");
        get_to(t, "numbers_to_sentinel", cfg.textprep.numbers_to_sentinel);
    }
    if (root.contains("dsm")) {
        const auto& d = root.at("dsm");
        check_keys(d,
                   {"dim", "window", "min_count", "negatives", "epochs", "initial_lr",
                    "noise_exponent", "subsample_threshold", "parallel"},
                   "dsm.");
        get_to(d, "dim", cfg.dsm.dim);
        get_to(d, "window", cfg.dsm.window);
        get_to(d, "min_count", cfg.dsm.min_count);
        get_to(d, "negatives", cfg.dsm.negatives);
        get_to(d, "epochs", cfg.dsm.epochs);
        get_to(d, "initial_lr", cfg.dsm.initial_lr);
        get_to(d, "noise_exponent", cfg.dsm.noise_exponent);
        get_to(d, "subsample_threshold", cfg.dsm.subsample_threshold);
        get_to(d, "parallel", cfg.dsm.parallel);
    }
    if (root.contains("network")) {
        const auto& n = root.at("network");
        check_keys(n, {"image_size", "conv_filters", "dense_units", "conv_dropout", "dense_dropout"},
                   "network.");
        get_to(n, "image_size", cfg.network.image_size);
        get_to(n, "conv_filters", cfg.network.conv_filters);
        get_to(n, "dense_units", cfg.network.dense_units);
        get_to(n, "conv_dropout", cfg.network.conv_dropout);
        get_to(n, "dense_dropout", cfg.network.dense_dropout);
    }
    if (root.contains("training")) {
        const auto& t = root.at("training");
        check_keys(t,
                   {"batch_size", "max_epochs", "learning_rate", "rho", "epsilon", "patience",
                    "min_delta"},
                   "training.");
        get_to(t, "batch_size", cfg.training.batch_size);
        get_to(t, "max_epochs", cfg.training.max_epochs);
        get_to(t, "learning_rate", cfg.training.learning_rate);
        get_to(t, "rho", cfg.training.rho);
        get_to(t, "epsilon", cfg.training.epsilon);
        get_to(t, "patience", cfg.training.patience);
        get_to(t, "min_delta", cfg.training.min_delta);
    }
    if (root.contains("evaluation")) {
        const auto& e = root.at("evaluation");
        check_keys(e, {"k", "restrict_top1"}, "evaluation.");
        get_to(e, "k", cfg.evaluation.k);
        get_to(e, "restrict_top1", cfg.evaluation.restrict_top1);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path);
}

}  // namespace vsem::cfg
