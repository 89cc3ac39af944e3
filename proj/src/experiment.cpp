#include "vsem/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vsem/image.hpp"

namespace fs = std::filesystem;

namespace vsem::exp {

std::string DatasetManifest::resolved_path(std::size_t i) const {
    const fs::path p(entries[i].image_path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (fs::path(base_dir) / p).string();
}

namespace {

std::vector<std::string> parse_csv_row(const std::string& line) {
    // plain two-column CSV; quoting is not needed for these manifests
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cols.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cols;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    DatasetManifest m;
    m.base_dir = fs::path(path).parent_path().string();

    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (!std::getline(in, line)) fail("empty manifest");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (parse_csv_row(line) != std::vector<std::string>{"path", "label"})
        fail("expected header \"path,label\"");

    std::set<std::string> seen_paths;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = parse_csv_row(line);
        if (cols.size() != 2) fail("expected 2 columns, got " + std::to_string(cols.size()));
        if (cols[0].empty()) fail("empty path");
        if (cols[1].empty()) fail("empty label");
        if (!seen_paths.insert(cols[0]).second) fail("duplicate path \"" + cols[0] + "\"");
        m.entries.push_back({cols[0], cols[1]});
        const std::string resolved = m.resolved_path(m.entries.size() - 1);
        if (!fs::exists(resolved)) fail("image file does not exist: " + resolved);
        ++m.class_count[cols[1]];
    }
    if (m.entries.empty()) throw ValidationError(path + ": manifest has no entries");
    for (const auto& [label, count] : m.class_count) m.classes.push_back(label);
    return m;
}

SplitPlan make_splits(const DatasetManifest& manifest, std::uint64_t seed) {
    SplitPlan plan;
    plan.seed = seed;
    plan.folds.resize(kNumFolds);
    Rng rng(derive_seed(seed, 11));

    // per class (sorted order): shuffle, hold out round(0.2*n) for eval,
    // slice the rest into five near-equal test chunks
    std::map<std::string, std::vector<std::int64_t>> by_class;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        by_class[manifest.entries[i].label].push_back(static_cast<std::int64_t>(i));

    std::vector<std::vector<std::int64_t>> fold_test(kNumFolds);
    std::int64_t class_pos = 0;
    for (auto& [label, idx] : by_class) {
        shuffle(idx, rng);
        const std::int64_t n = static_cast<std::int64_t>(idx.size());
        const std::int64_t n_eval = static_cast<std::int64_t>(
            std::llround(kEvalFraction * static_cast<double>(n)));
        for (std::int64_t i = 0; i < n_eval; ++i) plan.eval.push_back(idx[static_cast<std::size_t>(i)]);
        const std::int64_t pool = n - n_eval;
        if (n == 1)
            plan.warnings.push_back("class \"" + label +
                                    "\" has a single sample; kept on the training side");
        else if (pool < kNumFolds)
            plan.warnings.push_back("class \"" + label + "\" has only " + std::to_string(pool) +
                                    " samples after the eval holdout");
        // chunk j of this class lands in fold (j + class_pos) % k, so the
        // leftover chunks of small classes spread over different folds
        for (std::int64_t j = 0; j < kNumFolds; ++j) {
            const std::int64_t lo = j * pool / kNumFolds;
            const std::int64_t hi = (j + 1) * pool / kNumFolds;
            const std::int64_t f = (j + class_pos) % kNumFolds;
            for (std::int64_t i = lo; i < hi; ++i)
                fold_test[static_cast<std::size_t>(f)].push_back(
                    idx[static_cast<std::size_t>(n_eval + i)]);
        }
        ++class_pos;
    }

    std::sort(plan.eval.begin(), plan.eval.end());
    for (int f = 0; f < kNumFolds; ++f) {
        auto& test = fold_test[static_cast<std::size_t>(f)];
        std::sort(test.begin(), test.end());
        auto& fold = plan.folds[static_cast<std::size_t>(f)];
        fold.test = test;
        for (int g = 0; g < kNumFolds; ++g) {
            if (g == f) continue;
            fold.train.insert(fold.train.end(), fold_test[static_cast<std::size_t>(g)].begin(),
                              fold_test[static_cast<std::size_t>(g)].end());
        }
        std::sort(fold.train.begin(), fold.train.end());
    }
    return plan;
}

ClassWeightTable compute_class_weights(const DatasetManifest& manifest) {
    ClassWeightTable table;
    const double n_total = static_cast<double>(manifest.entries.size());
    const double k = static_cast<double>(manifest.classes.size());
    for (const auto& [label, count] : manifest.class_count)
        table[label] = n_total / (k * static_cast<double>(count));
    return table;
}

Tensor<float> annotate_vectors(const DatasetManifest& manifest, const dsm::EmbeddingModel& model,
                               const std::map<std::string, std::string>& label_map) {
    std::vector<std::string> missing_labels, oov_labels;
    std::map<std::string, std::vector<float>> cache;
    for (const auto& label : manifest.classes) {
        auto it = label_map.find(label);
        if (it == label_map.end()) {
            missing_labels.push_back(label);
            continue;
        }
        if (!model.vocab.lookup(it->second)) oov_labels.push_back(label + " -> " + it->second);
    }
    if (!missing_labels.empty() || !oov_labels.empty()) {
        std::string msg = "annotate_vectors:";
        if (!missing_labels.empty()) {
            msg += " labels missing from the label map:";
            for (const auto& l : missing_labels) msg += " " + l;
            msg += ";";
        }
        if (!oov_labels.empty()) {
            msg += " target words not in the vocabulary:";
            for (const auto& l : oov_labels) msg += " " + l;
        }
        throw ValidationError(msg);
    }
    for (const auto& label : manifest.classes)
        cache[label] = dsm::embed(model, label_map.at(label));

    Tensor<float> targets({static_cast<std::int64_t>(manifest.entries.size()), model.dim});
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& vec = cache[manifest.entries[i].label];
        std::copy(vec.begin(), vec.end(),
                  targets.v.begin() + static_cast<std::ptrdiff_t>(i * vec.size()));
    }
    return targets;
}

std::map<std::string, std::string> load_label_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label map: " + path);
    std::map<std::string, std::string> map;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (!std::getline(in, line)) fail("empty label map");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (parse_csv_row(line) != std::vector<std::string>{"label", "target_word"})
        fail("expected header \"label,target_word\"");
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = parse_csv_row(line);
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) fail("malformed row");
        if (!map.emplace(cols[0], cols[1]).second) fail("duplicate label \"" + cols[0] + "\"");
    }
    if (map.empty()) fail("label map has no rows");
    return map;
}

void TrainRunConfig::validate() const {
    if (image_size < 8) throw ValidationError("training: image_size must be >= 8");
    if (conv_filters.size() != 3) throw ValidationError("training: conv_filters needs 3 entries");
    for (auto f : conv_filters)
        if (f < 1) throw ValidationError("training: conv filters must be >= 1");
    if (dense_units < 1) throw ValidationError("training: dense_units must be >= 1");
    if (conv_dropout < 0 || conv_dropout >= 1 || dense_dropout < 0 || dense_dropout >= 1)
        throw ValidationError("training: dropout rates must be in [0,1)");
    if (batch_size < 1) throw ValidationError("training: batch_size must be >= 1");
    if (max_epochs < 1) throw ValidationError("training: max_epochs must be >= 1");
    if (!(learning_rate > 0)) throw ValidationError("training: learning_rate must be > 0");
    if (rho <= 0 || rho >= 1) throw ValidationError("training: rho must be in (0,1)");
    if (!(epsilon > 0)) throw ValidationError("training: epsilon must be > 0");
    if (patience < 1) throw ValidationError("training: patience must be >= 1");
    if (min_delta < 0) throw ValidationError("training: min_delta must be >= 0");
}

net::NetworkSpec network_for(const TrainRunConfig& config, std::int64_t head_dim, Mode mode) {
    return net::stacked_conv_network(config.image_size, config.image_size, 3,
                                     mode == Mode::Vector ? net::Head::Vector : net::Head::Flat,
                                     head_dim, config.conv_filters, config.dense_units,
                                     config.conv_dropout, config.dense_dropout);
}

std::vector<Tensor<float>> load_images(const DatasetManifest& manifest, std::int64_t image_size) {
    std::vector<Tensor<float>> images;
    images.reserve(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        images.push_back(img::load_image_tensor(manifest.resolved_path(i), image_size));
    return images;
}

namespace {

struct SampleTargets {
    // one of the two, depending on mode
    Tensor<float> vectors;              // (N_manifest, dim)
    std::vector<std::int64_t> classes;  // per manifest entry
    std::vector<float> weights;         // per manifest entry
    std::int64_t head_dim = 0;
};

SampleTargets prepare_targets(const DatasetManifest& manifest, const TrainRunConfig& config,
                              const dsm::EmbeddingModel* model) {
    SampleTargets t;
    const ClassWeightTable weights = compute_class_weights(manifest);
    t.weights.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries)
        t.weights.push_back(static_cast<float>(weights.at(e.label)));
    if (config.mode == Mode::Vector) {
        if (!model) throw ValidationError("vector mode requires a DSM model");
        t.vectors = annotate_vectors(manifest, *model, config.label_map);
        t.head_dim = model->dim;
    } else {
        std::map<std::string, std::int64_t> class_index;
        for (std::size_t c = 0; c < manifest.classes.size(); ++c)
            class_index[manifest.classes[c]] = static_cast<std::int64_t>(c);
        for (const auto& e : manifest.entries) t.classes.push_back(class_index.at(e.label));
        t.head_dim = static_cast<std::int64_t>(manifest.classes.size());
    }
    return t;
}

net::TargetBatch<float> gather_batch(const std::vector<Tensor<float>>& images,
                                     const SampleTargets& targets, const TrainRunConfig& config,
                                     const std::vector<std::int64_t>& idx, std::size_t lo,
                                     std::size_t hi, Tensor<float>& x) {
    const std::int64_t B = static_cast<std::int64_t>(hi - lo);
    const std::int64_t S = config.image_size;
    x = Tensor<float>({B, S, S, 3});
    net::TargetBatch<float> batch;
    batch.weights.reserve(static_cast<std::size_t>(B));
    if (config.mode == Mode::Vector) batch.vectors = Tensor<float>({B, targets.head_dim});
    for (std::size_t b = 0; b < static_cast<std::size_t>(B); ++b) {
        const std::int64_t i = idx[lo + b];
        const auto& im = images[static_cast<std::size_t>(i)];
        std::copy(im.v.begin(), im.v.end(),
                  x.v.begin() + static_cast<std::ptrdiff_t>(b * im.v.size()));
        if (config.mode == Mode::Vector) {
            const float* row = &targets.vectors.v[static_cast<std::size_t>(i * targets.head_dim)];
            std::copy(row, row + targets.head_dim,
                      batch.vectors.v.begin() +
                          static_cast<std::ptrdiff_t>(b * static_cast<std::size_t>(targets.head_dim)));
        } else {
            batch.classes.push_back(targets.classes[static_cast<std::size_t>(i)]);
        }
        batch.weights.push_back(targets.weights[static_cast<std::size_t>(i)]);
    }
    return batch;
}

double dataset_loss(net::TrainState<float>& state, const std::vector<Tensor<float>>& images,
                    const SampleTargets& targets, const TrainRunConfig& config,
                    const std::vector<std::int64_t>& idx, net::LossKind loss) {
    double total = 0;
    std::size_t pos = 0;
    Tensor<float> x;
    while (pos < idx.size()) {
        const std::size_t hi = std::min(pos + static_cast<std::size_t>(config.batch_size), idx.size());
        auto batch = gather_batch(images, targets, config, idx, pos, hi, x);
        const double l = net::compute_loss(state, x, batch, loss, /*training=*/false);
        total += l * static_cast<double>(hi - pos);
        pos = hi;
    }
    return total / static_cast<double>(idx.size());
}

}  // namespace

TrainRunResult run_training_cached(const DatasetManifest& manifest, const SplitPlan& plan,
                                   const TrainRunConfig& config, const dsm::EmbeddingModel* model,
                                   const std::vector<Tensor<float>>& images,
                                   const std::string& out_dir) {
    config.validate();
    fs::create_directories(out_dir);
    const SampleTargets targets = prepare_targets(manifest, config, model);
    const net::LossKind loss = config.mode == Mode::Vector ? net::LossKind::MeanAbsoluteError
                                                           : net::LossKind::WeightedCrossEntropy;
    const net::NetworkSpec spec = network_for(config, targets.head_dim, config.mode);

    TrainRunResult result;
    result.classes = manifest.classes;
    for (int f = 0; f < kNumFolds; ++f) {
        FoldOutcome outcome;
        outcome.fold = f;
        const auto& fold = plan.folds[static_cast<std::size_t>(f)];
        try {
            auto state = net::build_network<float>(
                spec, derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(f)));
            Rng order_rng(derive_seed(config.seed, 2000 + static_cast<std::uint64_t>(f)));
            EarlyStopper stopper{config.patience, config.min_delta};
            net::WeightSnapshot<float> best;
            std::vector<std::int64_t> order = fold.train;
            Tensor<float> x;
            for (std::int64_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
                shuffle(order, order_rng);
                double train_total = 0;
                std::size_t pos = 0;
                while (pos < order.size()) {
                    const std::size_t hi =
                        std::min(pos + static_cast<std::size_t>(config.batch_size), order.size());
                    auto batch = gather_batch(images, targets, config, order, pos, hi, x);
                    const double l = net::train_step(
                        state, x, batch, loss, static_cast<float>(config.learning_rate),
                        static_cast<float>(config.rho), static_cast<float>(config.epsilon));
                    train_total += l * static_cast<double>(hi - pos);
                    pos = hi;
                }
                const double train_loss = train_total / static_cast<double>(order.size());
                // degenerate plans can leave a fold without test samples; the
                // monitor falls back to the train loss then
                const double test_loss =
                    fold.test.empty() ? train_loss
                                      : dataset_loss(state, images, targets, config, fold.test, loss);
                if (!std::isfinite(test_loss))
                    throw NumericError("fold " + std::to_string(f) + ": non-finite test loss");
                outcome.history.push_back({f, epoch, train_loss, test_loss});
                if (stopper.observe(epoch, test_loss)) best = net::snapshot_weights(state);
                if (stopper.should_stop()) break;
            }
            if (stopper.best_epoch >= 0) net::restore_weights(state, best);
            outcome.best_epoch = stopper.best_epoch;
            outcome.best_test_loss = stopper.best;
            outcome.checkpoint_path =
                (fs::path(out_dir) / ("fold" + std::to_string(f) + ".ckpt")).string();
            net::save_checkpoint(state, outcome.checkpoint_path);
            outcome.ok = true;
        } catch (const NumericError& e) {
            outcome.ok = false;
            outcome.error = e.what();
        }
        result.folds.push_back(std::move(outcome));
    }

    std::ofstream hist(fs::path(out_dir) / "history.jsonl");
    if (!hist) throw IoError("cannot write history under " + out_dir);
    for (const auto& fo : result.folds)
        for (const auto& rec : fo.history) {
            nlohmann::json j;
            j["fold"] = rec.fold;
            j["epoch"] = rec.epoch;
            j["train_loss"] = rec.train_loss;
            j["test_loss"] = rec.test_loss;
            hist << j.dump() << "\n";
        }
    return result;
}

TrainRunResult run_training(const DatasetManifest& manifest, const SplitPlan& plan,
                            const TrainRunConfig& config, const dsm::EmbeddingModel* model,
                            const std::string& out_dir) {
    config.validate();
    const auto images = load_images(manifest, config.image_size);
    return run_training_cached(manifest, plan, config, model, images, out_dir);
}

}  // namespace vsem::exp
