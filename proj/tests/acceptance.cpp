// Acceptance suite: one pass/fail line per criterion. Exits nonzero if any
// criterion fails. The end-to-end criteria drive the real CLI binary (path
// injected by the build) on the synthetic fixture.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsem/common.hpp"
#include "vsem/dsm.hpp"
#include "vsem/evaluation.hpp"
#include "vsem/experiment.hpp"
#include "vsem/network.hpp"

#ifndef VSEM_CLI_PATH
#define VSEM_CLI_PATH "vsem"
#endif

namespace fs = std::filesystem;
using namespace vsem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail) {
    std::printf("[%2d/11] %-22s %s%s%s\n", index, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void gradient_correctness() {
    const auto start = Clock::now();
    auto dense = [](std::vector<std::int64_t> hidden, net::Head head, std::int64_t head_dim,
                    bool dropout) {
        net::NetworkSpec spec;
        spec.height = 1;
        spec.width = 1;
        spec.channels = 5;
        spec.head = head;
        spec.head_dim = head_dim;
        spec.layers.push_back(net::FlattenSpec{});
        for (auto h : hidden) {
            spec.layers.push_back(net::DenseSpec{h});
            spec.layers.push_back(net::ReLUSpec{});
            if (dropout) spec.layers.push_back(net::DropoutSpec{0.4});
        }
        spec.layers.push_back(net::DenseSpec{head_dim});
        if (head == net::Head::Vector)
            spec.layers.push_back(net::LinearSpec{});
        else
            spec.layers.push_back(net::SoftmaxSpec{});
        return spec;
    };
    net::NetworkSpec conv;
    conv.height = 6;
    conv.width = 6;
    conv.channels = 2;
    conv.head = net::Head::Flat;
    conv.head_dim = 4;
    conv.layers = {net::Conv2DSpec{3}, net::ReLUSpec{}, net::MaxPoolSpec{}, net::FlattenSpec{},
                   net::DenseSpec{4}, net::SoftmaxSpec{}};
    net::NetworkSpec conv_vec = conv;
    conv_vec.head = net::Head::Vector;
    conv_vec.head_dim = 3;
    conv_vec.layers.back() = net::LinearSpec{};
    conv_vec.layers[conv_vec.layers.size() - 2] = net::DenseSpec{3};

    double dense_max = 0, conv_max = 0;
    bool pass = true;
    for (const auto& [spec, loss] :
         std::vector<std::pair<net::NetworkSpec, net::LossKind>>{
             {dense({}, net::Head::Vector, 3, false), net::LossKind::MeanAbsoluteError},
             {dense({7}, net::Head::Vector, 3, false), net::LossKind::MeanAbsoluteError},
             {dense({6}, net::Head::Flat, 4, false), net::LossKind::WeightedCrossEntropy},
             {dense({6}, net::Head::Vector, 3, true), net::LossKind::MeanAbsoluteError},
             {dense({6}, net::Head::Flat, 4, true), net::LossKind::WeightedCrossEntropy},
         }) {
        const auto rep = net::gradient_check(spec, loss, 1e-6);
        dense_max = std::max(dense_max, rep.max_rel_err);
        pass = pass && rep.pass;
    }
    for (const auto& [spec, loss] : std::vector<std::pair<net::NetworkSpec, net::LossKind>>{
             {conv, net::LossKind::WeightedCrossEntropy},
             {conv_vec, net::LossKind::MeanAbsoluteError}}) {
        const auto rep = net::gradient_check(spec, loss, 1e-4);
        conv_max = std::max(conv_max, rep.max_rel_err);
        pass = pass && rep.pass;
    }
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 60.0;
    report(1, "gradient correctness", pass,
           fmt("(dense max %.2e < 1e-6, conv max %.2e < 1e-4, %.1f s)", dense_max, conv_max,
               elapsed));
}

// ---------------------------------------------------------------- criterion 2
void skipgram_gradient() {
    Rng rng(1234);
    double worst = 0;
    for (int iter = 0; iter < 100; ++iter) {
        const std::int64_t dim = 2;
        std::vector<double> vc(dim), uo(dim), un(dim);
        for (auto& x : vc) x = rng.uniform(-1.5, 1.5);
        for (auto& x : uo) x = rng.uniform(-1.5, 1.5);
        for (auto& x : un) x = rng.uniform(-1.5, 1.5);
        std::vector<const double*> negs = {un.data()};
        std::vector<double> d_vc, d_uo;
        std::vector<std::vector<double>> d_negs;
        dsm::sgns_pair_grads(vc.data(), uo.data(), negs, dim, d_vc, d_uo, d_negs);
        const double h = 1e-5;
        auto fd = [&](std::vector<double>& param, std::size_t j) {
            const double orig = param[j];
            param[j] = orig + h;
            const double lp = dsm::sgns_pair_loss(vc.data(), uo.data(), negs, dim);
            param[j] = orig - h;
            const double lm = dsm::sgns_pair_loss(vc.data(), uo.data(), negs, dim);
            param[j] = orig;
            return (lp - lm) / (2 * h);
        };
        for (std::size_t j = 0; j < 2; ++j) {
            const double n_vc = fd(vc, j), n_uo = fd(uo, j);
            worst = std::max(worst, std::abs(d_vc[j] - n_vc) /
                                        std::max(std::abs(d_vc[j]) + std::abs(n_vc), 1e-12));
            worst = std::max(worst, std::abs(d_uo[j] - n_uo) /
                                        std::max(std::abs(d_uo[j]) + std::abs(n_uo), 1e-12));
        }
    }
    report(2, "skipgram gradient", worst < 1e-6, fmt("(max rel err %.2e < 1e-6)", worst));
}

// ---------------------------------------------------------------- criterion 3
void dsm_separability() {
    const auto start = Clock::now();
    int successes = 0;
    for (int run = 0; run < 100; ++run) {
        Rng corpus_rng(static_cast<std::uint64_t>(run) * 13 + 1);
        const std::vector<std::string> a = {"a1", "a2", "a3"}, b = {"b1", "b2", "b3"};
        std::vector<std::vector<std::string>> sentences;
        for (int i = 0; i < 30; ++i) {
            const auto& side = i % 2 == 0 ? a : b;
            std::vector<std::string> sent;
            for (int j = 0; j < 4; ++j) sent.push_back(side[corpus_rng.below(3)]);
            sentences.push_back(std::move(sent));
        }
        dsm::SkipgramConfig cfg;
        cfg.dim = 8;
        cfg.window = 3;
        cfg.min_count = 1;
        cfg.epochs = 200;
        cfg.seed = static_cast<std::uint64_t>(run) + 500;
        const auto model = dsm::train_skipgram(sentences, cfg);
        auto mean_cos = [&](const std::vector<std::string>& xs,
                            const std::vector<std::string>& ys) {
            double total = 0;
            int n = 0;
            for (const auto& x : xs)
                for (const auto& y : ys) {
                    if (x == y) continue;
                    total += dsm::cosine(dsm::embed(model, x), dsm::embed(model, y));
                    ++n;
                }
            return total / n;
        };
        const double within = (mean_cos(a, a) + mean_cos(b, b)) / 2.0;
        if (within > mean_cos(a, b)) ++successes;
    }
    const double elapsed = seconds_since(start);
    report(3, "dsm separability", successes >= 95 && elapsed < 120.0,
           fmt("(%g/100 runs separated, %.1f s)", successes, elapsed));
}

// ---------------------------------------------------------------- criterion 4
dsm::EmbeddingModel random_model(std::int64_t V, std::int64_t dim, Rng& rng) {
    std::vector<std::vector<std::string>> sentences(1);
    for (std::int64_t i = 0; i < V; ++i) sentences[0].push_back("w" + std::to_string(i));
    dsm::EmbeddingModel m;
    m.vocab = dsm::build_vocab(sentences, 1);
    m.dim = dim;
    m.config.dim = dim;
    m.input_vectors.resize(static_cast<std::size_t>(V * dim));
    m.output_vectors.resize(m.input_vectors.size());
    for (auto& x : m.input_vectors) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return m;
}

void knn_oracle_equivalence() {
    Rng rng(777);
    int cases = 0;
    bool pass = true;
    while (cases < 1000 && pass) {
        const std::int64_t V = 2 + static_cast<std::int64_t>(rng.below(40));
        const std::int64_t dim = 1 + static_cast<std::int64_t>(rng.below(10));
        const auto model = random_model(V, dim, rng);
        std::vector<float> q(static_cast<std::size_t>(dim));
        for (auto& x : q) x = static_cast<float>(rng.uniform(-1.0, 1.0));
        bool zero = true;
        for (float x : q) zero = zero && x == 0.0f;
        if (zero) continue;
        const std::int64_t k =
            1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(V + 3)));
        ++cases;

        const auto got = dsm::nearest_neighbors(model, q, k).items;

        // independent naive double loop selecting the max each round
        std::vector<std::pair<double, std::int64_t>> scored;
        for (std::int64_t c = 0; c < V; ++c) {
            const float* row = model.input_row(c);
            double dot = 0, qn = 0, rn = 0;
            for (std::int64_t i = 0; i < dim; ++i) {
                dot += static_cast<double>(q[static_cast<std::size_t>(i)]) * row[i];
                qn += static_cast<double>(q[static_cast<std::size_t>(i)]) *
                      q[static_cast<std::size_t>(i)];
                rn += static_cast<double>(row[i]) * row[i];
            }
            if (rn == 0) continue;
            double cos = dot / (std::sqrt(qn) * std::sqrt(rn));
            cos = std::min(1.0, std::max(-1.0, cos));
            scored.emplace_back(cos, c);
        }
        std::vector<std::pair<std::string, double>> want;
        for (std::int64_t taken = 0; taken < k && !scored.empty(); ++taken) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < scored.size(); ++i)
                if (scored[i].first > scored[best].first ||
                    (scored[i].first == scored[best].first &&
                     scored[i].second < scored[best].second))
                    best = i;
            want.emplace_back(model.vocab.words[static_cast<std::size_t>(scored[best].second)],
                              scored[best].first);
            scored.erase(scored.begin() + static_cast<std::ptrdiff_t>(best));
        }
        if (got.size() != want.size()) {
            pass = false;
            break;
        }
        for (std::size_t i = 0; i < got.size(); ++i)
            if (got[i].word != want[i].first || got[i].score != want[i].second) pass = false;
    }
    report(4, "knn oracle equivalence", pass, "(1000 randomized cases, exact incl. tie order)");
}

// ---------------------------------------------------------------- criterion 5
void metrics_oracle() {
    bool pass = true;

    // hand-computed fixture: gold [a,a,b], predicted [a,b,b]
    std::vector<eval::Prediction> fixture{
        {"1", "a", {{"a", 0.9}}, false},
        {"2", "a", {{"b", 0.8}}, false},
        {"3", "b", {{"b", 0.7}}, false},
    };
    const auto fx = eval::top1_metrics(fixture, {"a", "b"});
    pass = pass && std::abs(fx.accuracy - 2.0 / 3.0) < 1e-15;
    pass = pass && std::abs(fx.macro_f1 - 2.0 / 3.0) < 1e-15;

    Rng rng(4242);
    const std::vector<std::string> classes = {"a", "b", "c", "d", "e"};
    for (int iter = 0; iter < 500 && pass; ++iter) {
        std::vector<eval::Prediction> preds;
        const std::size_t n = 1 + rng.below(30);
        for (std::size_t i = 0; i < n; ++i) {
            eval::Prediction p;
            p.sample_id = "s" + std::to_string(i);
            p.gold = classes[rng.below(classes.size())];
            if (rng.below(10) == 0) {
                p.undecodable = true;
            } else {
                std::vector<std::string> pool = classes;
                shuffle(pool, rng);
                double score = 1.0;
                for (std::size_t j = 0; j < classes.size(); ++j) {
                    score -= rng.uniform() * 0.1;
                    p.topk.emplace_back(pool[j], score);
                }
            }
            preds.push_back(std::move(p));
        }

        // naive re-implementation
        int correct = 0;
        double psum = 0, rsum = 0, fsum = 0;
        for (const auto& c : classes) {
            int tp = 0, pred_c = 0, gold_c = 0;
            for (const auto& p : preds) {
                const bool has = !p.undecodable && !p.topk.empty();
                if (p.gold == c) ++gold_c;
                if (has && p.topk.front().first == c) {
                    ++pred_c;
                    if (p.gold == c) ++tp;
                }
            }
            const double prec = pred_c ? static_cast<double>(tp) / pred_c : 0.0;
            const double rec = gold_c ? static_cast<double>(tp) / gold_c : 0.0;
            psum += prec;
            rsum += rec;
            fsum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        }
        for (const auto& p : preds)
            if (!p.undecodable && p.topk.front().first == p.gold) ++correct;
        int hits3 = 0;
        for (const auto& p : preds) {
            if (p.undecodable) continue;
            for (std::size_t j = 0; j < 3; ++j)
                if (p.topk[j].first == p.gold) {
                    ++hits3;
                    break;
                }
        }

        const auto got = eval::top1_metrics(preds, classes);
        const double k = static_cast<double>(classes.size());
        const double dn = static_cast<double>(n);
        pass = pass && std::abs(got.accuracy - static_cast<double>(correct) / dn) < 1e-12;
        pass = pass && std::abs(got.macro_precision - psum / k) < 1e-12;
        pass = pass && std::abs(got.macro_recall - rsum / k) < 1e-12;
        pass = pass && std::abs(got.macro_f1 - fsum / k) < 1e-12;
        pass = pass &&
               std::abs(eval::topk_hit_rate(preds, 3) - static_cast<double>(hits3) / dn) < 1e-12;
    }
    report(5, "metrics oracle", pass, "(500 randomized sets + exact hand fixture)");
}

// criteria 6..11 -------------------------------------------------------------

struct FixturePaths {
    fs::path root, fixture, out1, out2;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VSEM_CLI_PATH) + " --quiet " + args + " 2>/dev/null";
    return std::system(cmd.c_str());
}

void complement_identity(const nlohmann::json& metrics, bool& pass) {
    for (const auto& [mode, body] : metrics.at("modes").items()) {
        (void)mode;
        for (const auto& fold : body.at("per_fold")) {
            const double tpr = fold.at("top5_tpr").get<double>();
            const double fpr = fold.at("top5_fpr").get<double>();
            if (fpr != 1.0 - tpr) pass = false;
        }
        const double tpr = body.at("mean").at("top5_tpr").get<double>();
        const double fpr = body.at("mean").at("top5_fpr").get<double>();
        if (fpr != 1.0 - tpr) pass = false;
    }
}

void split_protocol() {
    Rng rng(31);
    bool pass = true;
    for (int iter = 0; iter < 50 && pass; ++iter) {
        exp::DatasetManifest m;
        const std::size_t k = 1 + rng.below(8);
        for (std::size_t c = 0; c < k; ++c) {
            const int n = 1 + static_cast<int>(rng.below(60));
            const std::string label = "class" + std::to_string(c);
            for (int i = 0; i < n; ++i) {
                m.entries.push_back({label + "_" + std::to_string(i) + ".ppm", label});
                ++m.class_count[label];
            }
        }
        for (const auto& [label, count] : m.class_count) m.classes.push_back(label);
        const auto plan = exp::make_splits(m, rng.raw());

        std::set<std::int64_t> eval_set(plan.eval.begin(), plan.eval.end());
        pass = pass && eval_set.size() == plan.eval.size();
        std::set<std::int64_t> test_union;
        std::size_t test_total = 0;
        for (const auto& fold : plan.folds) {
            for (auto i : fold.test) {
                if (eval_set.count(i)) pass = false;
                test_union.insert(i);
            }
            test_total += fold.test.size();
            pass = pass &&
                   fold.train.size() + fold.test.size() + plan.eval.size() == m.entries.size();
        }
        pass = pass && test_union.size() == test_total;                     // disjoint
        pass = pass && test_total + plan.eval.size() == m.entries.size();  // covering

        std::map<std::string, std::int64_t> eval_per_class;
        for (auto i : plan.eval) ++eval_per_class[m.entries[static_cast<std::size_t>(i)].label];
        for (const auto& [label, count] : m.class_count) {
            const double expect = exp::kEvalFraction * static_cast<double>(count);
            if (std::abs(static_cast<double>(eval_per_class[label]) - expect) > 1.0) pass = false;
        }
    }
    report(7, "split protocol", pass, "(50 randomized manifests: 20% eval +-1 per class, 5 folds)");
}

void class_weights() {
    bool pass = true;
    exp::DatasetManifest m;
    for (int i = 0; i < 2; ++i) m.entries.push_back({"a" + std::to_string(i), "a"});
    for (int i = 0; i < 6; ++i) m.entries.push_back({"b" + std::to_string(i), "b"});
    m.class_count = {{"a", 2}, {"b", 6}};
    m.classes = {"a", "b"};
    const auto w = exp::compute_class_weights(m);
    pass = pass && w.at("a") == 2.0;
    pass = pass && w.at("b") == 2.0 / 3.0;
    double sum = 0;
    for (const auto& [label, weight] : w)
        sum += weight * static_cast<double>(m.class_count.at(label));
    pass = pass && sum == 8.0;  // bit-exact for this fixture

    // randomized counts: exact in real arithmetic, checked at ulp level
    Rng rng(88);
    double worst = 0;
    for (int iter = 0; iter < 200; ++iter) {
        exp::DatasetManifest r;
        const std::size_t k = 1 + rng.below(12);
        for (std::size_t c = 0; c < k; ++c) {
            const std::string label = "c" + std::to_string(c);
            const int n = 1 + static_cast<int>(rng.below(300));
            r.class_count[label] = n;
            r.classes.push_back(label);
            for (int i = 0; i < n; ++i) r.entries.push_back({label + std::to_string(i), label});
        }
        const auto rw = exp::compute_class_weights(r);
        double rsum = 0;
        for (const auto& [label, weight] : rw)
            rsum += weight * static_cast<double>(r.class_count.at(label));
        const double n_total = static_cast<double>(r.entries.size());
        worst = std::max(worst, std::abs(rsum - n_total) / n_total);
    }
    pass = pass && worst < 1e-12;
    report(8, "class weights", pass,
           fmt("({2,6} -> {2.0, 2/3} exact, random identity rel err %.1e)", worst));
}

void early_stopping() {
    // scripted fold-test losses [1.0, 0.9, 0.91, 0.92, 0.93], patience 3:
    // training must stop after epoch 5 and restore epoch 2's weights
    net::NetworkSpec spec;
    spec.height = 1;
    spec.width = 1;
    spec.channels = 4;
    spec.head = net::Head::Vector;
    spec.head_dim = 2;
    spec.layers = {net::FlattenSpec{}, net::DenseSpec{2}, net::LinearSpec{}};
    auto state = net::build_network<float>(spec, 3);

    Tensor<float> x({1, 1, 1, 4});
    x.fill(0.5f);
    net::TargetBatch<float> targets;
    targets.vectors = Tensor<float>({1, 2});
    targets.vectors.fill(1.0f);

    const double losses[] = {1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97, 0.98};
    exp::EarlyStopper stopper{3, 1e-4};
    net::WeightSnapshot<float> best;
    net::WeightSnapshot<float> epoch2;
    std::int64_t stopped_after = -1;
    for (std::int64_t epoch = 1; epoch <= 10; ++epoch) {
        net::train_step(state, x, targets, net::LossKind::MeanAbsoluteError, 0.05f, 0.9f, 1e-7f);
        if (epoch == 2) epoch2 = net::snapshot_weights(state);
        if (stopper.observe(epoch, losses[epoch - 1])) best = net::snapshot_weights(state);
        if (stopper.should_stop()) {
            stopped_after = epoch;
            break;
        }
    }
    net::restore_weights(state, best);

    bool pass = stopped_after == 5 && stopper.best_epoch == 2;
    for (std::size_t i = 0; i < state.params.size() && pass; ++i) {
        pass = pass && state.params[i].w == epoch2.w[i];
        pass = pass && state.params[i].b == epoch2.b[i];
    }
    pass = pass && state.step == 2;
    report(9, "early stopping", pass,
           fmt("(stopped after epoch %g, restored epoch %g)", static_cast<double>(stopped_after),
               static_cast<double>(stopper.best_epoch)));
}

void end_to_end(const FixturePaths& paths) {
    const auto start = Clock::now();
    bool pass6 = true;

    const std::string common = "compare --corpus-dir " + (paths.fixture / "corpus").string() +
                               " --manifest " + (paths.fixture / "manifest.csv").string() +
                               " --label-map " + (paths.fixture / "labelmap.csv").string() +
                               " --config " + (paths.fixture / "config.json").string();

    if (run_cli(common + " --out-dir " + paths.out1.string()) != 0) {
        report(6, "complement identity", false, "(compare run failed)");
        report(10, "end-to-end compare", false, "(compare run failed)");
        report(11, "determinism", false, "(compare run failed)");
        return;
    }
    const double elapsed = seconds_since(start);

    nlohmann::json metrics;
    {
        std::ifstream in(paths.out1 / "metrics.json");
        metrics = nlohmann::json::parse(in);
    }
    complement_identity(metrics, pass6);
    report(6, "complement identity", pass6, "(top5_fpr == 1 - top5_tpr on every fold and mean)");

    const double flat_top1 = metrics["modes"]["flat"]["mean"]["top1_accuracy"].get<double>();
    const double vec_top5 = metrics["modes"]["vector"]["mean"]["top5_tpr"].get<double>();
    const double vec_top1 = metrics["modes"]["vector"]["mean"]["top1_accuracy"].get<double>();
    const bool pass10 = elapsed < 900.0 && flat_top1 >= 0.8 && vec_top5 >= 0.8 && vec_top1 >= 0.6;
    report(10, "end-to-end compare", pass10,
           fmt("(%.0f s < 900; flat top1 %.3f >= 0.8, vector top5 %.3f >= 0.8", elapsed, flat_top1,
               vec_top5) +
               fmt(", vector top1 %.3f >= 0.6)", vec_top1));

    if (run_cli(common + " --out-dir " + paths.out2.string()) != 0) {
        report(11, "determinism", false, "(second compare run failed)");
        return;
    }
    std::ifstream a(paths.out1 / "metrics.json", std::ios::binary);
    std::ifstream b(paths.out2 / "metrics.json", std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                              std::istreambuf_iterator<char>());
    const bool pass11 = !bytes_a.empty() && bytes_a == bytes_b;
    report(11, "determinism", pass11, "(two compare runs, byte-identical metrics.json)");
}

}  // namespace

int main() {
    std::printf("acceptance suite (%s)\n", VSEM_CLI_PATH);

    FixturePaths paths;
    paths.root = fs::temp_directory_path() / "vsem_acceptance";
    fs::remove_all(paths.root);
    fs::create_directories(paths.root);
    paths.fixture = paths.root / "fixture";
    paths.out1 = paths.root / "out1";
    paths.out2 = paths.root / "out2";

    gradient_correctness();
    skipgram_gradient();
    dsm_separability();
    knn_oracle_equivalence();
    metrics_oracle();
    split_protocol();
    class_weights();
    early_stopping();

    if (run_cli("synth --out-dir " + paths.fixture.string()) != 0) {
        report(6, "complement identity", false, "(synth failed)");
        report(10, "end-to-end compare", false, "(synth failed)");
        report(11, "determinism", false, "(synth failed)");
    } else {
        end_to_end(paths);
    }

    fs::remove_all(paths.root);
    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 11 criteria PASSED\n");
    return 0;
}
