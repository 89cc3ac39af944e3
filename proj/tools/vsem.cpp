#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vsem/config.hpp"
#include "vsem/dsm.hpp"
#include "vsem/evaluation.hpp"
#include "vsem/experiment.hpp"
#include "vsem/network.hpp"
#include "vsem/synth.hpp"
#include "vsem/textprep.hpp"

namespace fs = std::filesystem;
using namespace vsem;

namespace {

int g_verbosity = 1;  // 0 quiet, 1 normal, 2 verbose

void log_info(const std::string& msg) {
    if (g_verbosity >= 1) std::cerr << msg << "\n";
}
void log_debug(const std::string& msg) {
    if (g_verbosity >= 2) std::cerr << msg << "\n";
}

cfg::RunConfig load_config_opt(const std::string& path) {
    if (path.empty()) return cfg::RunConfig{};
    return cfg::load_run_config(path);
}

std::vector<textprep::TokenStream> prep_corpus(const std::string& corpus_dir,
                                               const std::string& rules_path,
                                               bool numbers_to_sentinel) {
    const auto docs = textprep::load_corpus_dir(corpus_dir);
    std::vector<textprep::ReplacementRule> rules;
    if (!rules_path.empty()) rules = textprep::load_rules(rules_path);
    std::vector<textprep::TokenStream> streams;
    streams.reserve(docs.size());
    for (const auto& doc : docs) {
        auto stream = textprep::tokenize(doc, numbers_to_sentinel);
        if (!rules.empty()) stream = textprep::apply_replacements(stream, rules);
        streams.push_back(std::move(stream));
    }
    return streams;
}

std::vector<std::vector<std::string>> flatten(const std::vector<textprep::TokenStream>& streams) {
    std::vector<std::vector<std::string>> sentences;
    for (const auto& s : streams)
        sentences.insert(sentences.end(), s.sentences.begin(), s.sentences.end());
    return sentences;
}

eval::ModeEvaluation evaluate_checkpoints(const exp::DatasetManifest& manifest,
                                          const exp::SplitPlan& plan,
                                          const std::vector<Tensor<float>>& images,
                                          const std::string& checkpoints_dir, exp::Mode mode,
                                          const dsm::EmbeddingModel* model,
                                          const std::map<std::string, std::string>& label_map,
                                          const eval::EvalOptions& options) {
    eval::ModeEvaluation me;
    me.mode = mode == exp::Mode::Vector ? "vector" : "flat";
    for (int f = 0; f < exp::kNumFolds; ++f) {
        const std::string ckpt =
            (fs::path(checkpoints_dir) / ("fold" + std::to_string(f) + ".ckpt")).string();
        if (!fs::exists(ckpt)) {
            log_info("skipping missing checkpoint " + ckpt);
            continue;
        }
        auto state = net::load_checkpoint(ckpt);
        auto fe = eval::evaluate_fold(state, manifest, images, plan.eval, mode, model, label_map,
                                      options);
        me.per_fold.push_back(std::move(fe.report));
        me.fold_predictions.push_back(std::move(fe.open_predictions));
    }
    if (me.per_fold.empty())
        throw ValidationError("no fold checkpoints found under " + checkpoints_dir);
    me.mean = eval::mean_report(me.per_fold);
    return me;
}

void print_split_warnings(const exp::SplitPlan& plan) {
    for (const auto& w : plan.warnings) log_info("warning: " + w);
}

struct CompareArgs {
    std::string corpus_dir, rules, manifest, label_map, out_dir, config;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_compare(const CompareArgs& args) {
    cfg::RunConfig config = load_config_opt(args.config);
    if (args.seed_set) config.seed = args.seed;

    fs::create_directories(args.out_dir);
    log_info("preprocessing corpus " + args.corpus_dir);
    const auto streams = prep_corpus(args.corpus_dir, args.rules, config.textprep.numbers_to_sentinel);
    const std::string tokens_path = (fs::path(args.out_dir) / "tokens.txt").string();
    textprep::write_token_file(tokens_path, streams);

    log_info("training skipgram model");
    const auto model = dsm::train_skipgram(flatten(streams), config.dsm_config());
    const std::string model_path = (fs::path(args.out_dir) / "dsm.txt").string();
    dsm::save_model(model, model_path);
    log_debug("vocabulary size " + std::to_string(model.vocab.size()));

    const auto manifest = exp::load_manifest(args.manifest);
    const auto label_map = exp::load_label_map(args.label_map);
    const auto plan = exp::make_splits(manifest, config.seed);
    print_split_warnings(plan);
    const auto images = exp::load_images(manifest, config.network.image_size);

    eval::EvalOptions options{config.evaluation.k, config.evaluation.restrict_top1};
    std::vector<eval::ModeEvaluation> evaluations;
    for (exp::Mode mode : {exp::Mode::Vector, exp::Mode::Flat}) {
        const bool vec = mode == exp::Mode::Vector;
        const std::string mode_dir = (fs::path(args.out_dir) / (vec ? "vector" : "flat")).string();
        log_info(std::string("training ") + (vec ? "vector" : "flat") + " mode");
        exp::TrainRunConfig tc = config.train_config(mode);
        if (vec) tc.label_map = label_map;
        const auto result = exp::run_training_cached(manifest, plan, tc, vec ? &model : nullptr,
                                                     images, mode_dir);
        for (const auto& fo : result.folds) {
            if (!fo.ok)
                log_info("fold " + std::to_string(fo.fold) + " failed: " + fo.error);
            else
                log_debug("fold " + std::to_string(fo.fold) + " best epoch " +
                          std::to_string(fo.best_epoch) + " test loss " +
                          std::to_string(fo.best_test_loss));
        }
        evaluations.push_back(evaluate_checkpoints(manifest, plan, images, mode_dir, mode,
                                                   vec ? &model : nullptr, label_map, options));
    }
    eval::emit_reports(evaluations, args.out_dir, options.k);
    log_info("reports written to " + args.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"image classification into a word-vector space, with a flat-label baseline"};
    app.require_subcommand(1);
    app.add_flag_callback("--quiet", [] { g_verbosity = 0; }, "suppress progress output");
    app.add_flag_callback("--verbose", [] { g_verbosity = 2; }, "extra progress output");

    // prep
    auto* prep = app.add_subcommand("prep", "clean a corpus directory into a token file");
    std::string prep_input, prep_rules, prep_output, prep_config;
    bool prep_stats = false, prep_no_sentinel = false;
    prep->add_option("--input", prep_input, "directory of plain-text documents")->required();
    prep->add_option("--rules", prep_rules, "replacement rules file");
    prep->add_option("--output", prep_output, "token file to write")->required();
    prep->add_option("--config", prep_config, "run config JSON");
    prep->add_flag("--stats", prep_stats, "print corpus statistics");
    prep->add_flag("--no-num-sentinel", prep_no_sentinel, "keep numbers as-is");
    prep->callback([&] {
        cfg::RunConfig config = load_config_opt(prep_config);
        const bool sentinel = prep_no_sentinel ? false : config.textprep.numbers_to_sentinel;
        const auto streams = prep_corpus(prep_input, prep_rules, sentinel);
        textprep::write_token_file(prep_output, streams);
        if (prep_stats) {
            const auto stats = textprep::corpus_stats(streams);
            std::cout << "documents " << streams.size() << "\n"
                      << "total_tokens " << stats.total_tokens << "\n"
                      << "distinct_forms " << stats.distinct_forms << "\n";
        }
    });

    // dsm-train
    auto* dsm_train = app.add_subcommand("dsm-train", "train a skipgram model on a token file");
    std::string dt_input, dt_output, dt_config;
    std::int64_t dt_dim = -1, dt_window = -1, dt_negatives = -1, dt_epochs = -1;
    std::int64_t dt_min_count = -1;
    double dt_lr = -1;
    std::uint64_t dt_seed = 0;
    bool dt_seed_set = false;
    dsm_train->add_option("--input", dt_input, "token file")->required();
    dsm_train->add_option("--output", dt_output, "model file to write")->required();
    dsm_train->add_option("--config", dt_config, "run config JSON");
    dsm_train->add_option("--dim", dt_dim, "embedding dimension");
    dsm_train->add_option("--window", dt_window, "max context offset");
    dsm_train->add_option("--min-count", dt_min_count, "minimum token frequency");
    dsm_train->add_option("--negatives", dt_negatives, "negative samples per pair");
    dsm_train->add_option("--epochs", dt_epochs, "training epochs");
    dsm_train->add_option("--lr", dt_lr, "initial learning rate");
    dsm_train->add_option("--seed", dt_seed, "RNG seed")->each([&](const std::string&) {
        dt_seed_set = true;
    });
    dsm_train->callback([&] {
        cfg::RunConfig config = load_config_opt(dt_config);
        dsm::SkipgramConfig sc = config.dsm_config();
        if (dt_dim > 0) sc.dim = dt_dim;
        if (dt_window > 0) sc.window = dt_window;
        if (dt_min_count > 0) sc.min_count = static_cast<std::uint64_t>(dt_min_count);
        if (dt_negatives >= 0) sc.negatives = dt_negatives;
        if (dt_epochs > 0) sc.epochs = dt_epochs;
        if (dt_lr > 0) sc.initial_lr = dt_lr;
        if (dt_seed_set) sc.seed = dt_seed;
        sc.validate();
        const auto sentences = textprep::read_token_file(dt_input);
        const auto model = dsm::train_skipgram(sentences, sc);
        dsm::save_model(model, dt_output);
        log_info("model with " + std::to_string(model.vocab.size()) + " words written to " +
                 dt_output);
    });

    // dsm-query
    auto* dsm_query = app.add_subcommand("dsm-query", "print nearest neighbors of a word");
    std::string dq_model, dq_word;
    std::int64_t dq_k = 5;
    dsm_query->add_option("--model", dq_model, "model file")->required();
    dsm_query->add_option("--word", dq_word, "query word")->required();
    dsm_query->add_option("--k", dq_k, "neighbor count");
    dsm_query->callback([&] {
        const auto model = dsm::load_model(dq_model);
        const auto query = dsm::embed(model, dq_word);
        const auto result = dsm::nearest_neighbors(model, query, dq_k);
        for (const auto& n : result.items) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", n.score);
            std::cout << n.word << " " << buf << "\n";
        }
    });

    // annotate
    auto* annotate = app.add_subcommand("annotate", "write per-sample target vectors");
    std::string an_manifest, an_model, an_label_map, an_output;
    annotate->add_option("--manifest", an_manifest, "dataset manifest CSV")->required();
    annotate->add_option("--model", an_model, "DSM model file")->required();
    annotate->add_option("--label-map", an_label_map, "label,target_word CSV")->required();
    annotate->add_option("--output", an_output, "target file to write")->required();
    annotate->callback([&] {
        const auto manifest = exp::load_manifest(an_manifest);
        const auto model = dsm::load_model(an_model);
        const auto label_map = exp::load_label_map(an_label_map);
        const auto targets = exp::annotate_vectors(manifest, model, label_map);
        std::ofstream out(an_output, std::ios::binary);
        if (!out) throw IoError("cannot write " + an_output);
        out << manifest.entries.size() << " " << model.dim << "\n";
        char buf[32];
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
            out << manifest.entries[i].image_path << "\t"
                << label_map.at(manifest.entries[i].label) << "\t";
            for (std::int64_t d = 0; d < model.dim; ++d) {
                std::snprintf(buf, sizeof buf, d ? " %.9g" : "%.9g",
                              static_cast<double>(targets.at2(static_cast<std::int64_t>(i), d)));
                out << buf;
            }
            out << "\n";
        }
        if (!out) throw IoError("write failed: " + an_output);
    });

    // train
    auto* train = app.add_subcommand("train", "run the cross-validated training for one mode");
    std::string tr_manifest, tr_model, tr_label_map, tr_out, tr_config, tr_mode;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    train->add_option("--mode", tr_mode, "vector or flat")
        ->required()
        ->check(CLI::IsMember({"vector", "flat"}));
    train->add_option("--manifest", tr_manifest, "dataset manifest CSV")->required();
    train->add_option("--model", tr_model, "DSM model file (vector mode)");
    train->add_option("--label-map", tr_label_map, "label,target_word CSV (vector mode)");
    train->add_option("--out-dir", tr_out, "output directory")->required();
    train->add_option("--config", tr_config, "run config JSON");
    train->add_option("--seed", tr_seed, "seed override")->each([&](const std::string&) {
        tr_seed_set = true;
    });
    train->callback([&] {
        cfg::RunConfig config = load_config_opt(tr_config);
        if (tr_seed_set) config.seed = tr_seed;
        const exp::Mode mode = tr_mode == "vector" ? exp::Mode::Vector : exp::Mode::Flat;
        const auto manifest = exp::load_manifest(tr_manifest);
        const auto plan = exp::make_splits(manifest, config.seed);
        print_split_warnings(plan);
        exp::TrainRunConfig tc = config.train_config(mode);
        dsm::EmbeddingModel model;
        if (mode == exp::Mode::Vector) {
            if (tr_model.empty() || tr_label_map.empty())
                throw ValidationError("vector mode requires --model and --label-map");
            model = dsm::load_model(tr_model);
            tc.label_map = exp::load_label_map(tr_label_map);
        }
        const auto result = exp::run_training(manifest, plan, tc,
                                              mode == exp::Mode::Vector ? &model : nullptr, tr_out);
        bool any_failed = false;
        for (const auto& fo : result.folds) {
            if (!fo.ok) {
                any_failed = true;
                log_info("fold " + std::to_string(fo.fold) + " failed: " + fo.error);
            } else {
                log_info("fold " + std::to_string(fo.fold) + ": best epoch " +
                         std::to_string(fo.best_epoch) + ", test loss " +
                         std::to_string(fo.best_test_loss));
            }
        }
        if (any_failed) throw NumericError("one or more folds aborted");
    });

    // eval
    auto* evalc = app.add_subcommand("eval", "evaluate fold checkpoints on the evaluation split");
    std::string ev_manifest, ev_model, ev_label_map, ev_ckpts, ev_out, ev_config, ev_mode;
    std::uint64_t ev_seed = 0;
    bool ev_seed_set = false;
    evalc->add_option("--mode", ev_mode, "vector or flat")
        ->required()
        ->check(CLI::IsMember({"vector", "flat"}));
    evalc->add_option("--manifest", ev_manifest, "dataset manifest CSV")->required();
    evalc->add_option("--checkpoints", ev_ckpts, "directory with fold{i}.ckpt")->required();
    evalc->add_option("--model", ev_model, "DSM model file (vector mode)");
    evalc->add_option("--label-map", ev_label_map, "label,target_word CSV (vector mode)");
    evalc->add_option("--out-dir", ev_out, "output directory")->required();
    evalc->add_option("--config", ev_config, "run config JSON");
    evalc->add_option("--seed", ev_seed, "seed override (must match training)")
        ->each([&](const std::string&) { ev_seed_set = true; });
    evalc->callback([&] {
        cfg::RunConfig config = load_config_opt(ev_config);
        if (ev_seed_set) config.seed = ev_seed;
        const exp::Mode mode = ev_mode == "vector" ? exp::Mode::Vector : exp::Mode::Flat;
        const auto manifest = exp::load_manifest(ev_manifest);
        const auto plan = exp::make_splits(manifest, config.seed);
        const auto images = exp::load_images(manifest, config.network.image_size);
        dsm::EmbeddingModel model;
        std::map<std::string, std::string> label_map;
        if (mode == exp::Mode::Vector) {
            if (ev_model.empty() || ev_label_map.empty())
                throw ValidationError("vector mode requires --model and --label-map");
            model = dsm::load_model(ev_model);
            label_map = exp::load_label_map(ev_label_map);
        }
        eval::EvalOptions options{config.evaluation.k, config.evaluation.restrict_top1};
        auto me = evaluate_checkpoints(manifest, plan, images, ev_ckpts, mode,
                                       mode == exp::Mode::Vector ? &model : nullptr, label_map,
                                       options);
        eval::emit_reports({me}, ev_out, options.k);
        log_info("reports written to " + ev_out);
    });

    // compare
    auto* compare = app.add_subcommand("compare", "full pipeline: both modes plus reports");
    CompareArgs ca;
    compare->add_option("--corpus-dir", ca.corpus_dir, "raw text corpus directory")->required();
    compare->add_option("--rules", ca.rules, "replacement rules file");
    compare->add_option("--manifest", ca.manifest, "dataset manifest CSV")->required();
    compare->add_option("--label-map", ca.label_map, "label,target_word CSV")->required();
    compare->add_option("--out-dir", ca.out_dir, "output directory")->required();
    compare->add_option("--config", ca.config, "run config JSON");
    compare->add_option("--seed", ca.seed, "seed override")->each([&](const std::string&) {
        ca.seed_set = true;
    });
    compare->callback([&] { run_compare(ca); });

    // synth
    auto* synth = app.add_subcommand("synth", "generate the synthetic fixture dataset");
    synth::SynthParams sp;
    std::string sy_out;
    synth->add_option("--out-dir", sy_out, "output directory (must be empty)")->required();
    synth->add_option("--classes", sp.classes, "number of classes");
    synth->add_option("--per-class", sp.per_class, "images per class");
    synth->add_option("--image-size", sp.image_size, "image edge length");
    synth->add_option("--seed", sp.seed, "RNG seed");
    synth->callback([&] {
        synth::generate_fixture(sy_out, sp);
        log_info("fixture written to " + sy_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const OovError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
