#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vsem/common.hpp"
#include "vsem/evaluation.hpp"

using namespace vsem;
using namespace vsem::eval;

namespace fs = std::filesystem;

namespace {

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

// independent naive re-implementation of accuracy / macro P/R/F1
struct NaiveMetrics {
    double accuracy, precision, recall, f1;
};

NaiveMetrics naive_top1(const std::vector<Prediction>& preds,
                        const std::vector<std::string>& classes) {
    int correct = 0;
    double psum = 0, rsum = 0, fsum = 0;
    for (const auto& c : classes) {
        int tp = 0, pred_c = 0, gold_c = 0;
        for (const auto& p : preds) {
            const bool has_pred = !p.undecodable && !p.topk.empty();
            const std::string pred = has_pred ? p.topk.front().first : "";
            if (p.gold == c) ++gold_c;
            if (has_pred && pred == c) ++pred_c;
            if (has_pred && pred == c && p.gold == c) ++tp;
        }
        const double prec = pred_c ? static_cast<double>(tp) / pred_c : 0.0;
        const double rec = gold_c ? static_cast<double>(tp) / gold_c : 0.0;
        psum += prec;
        rsum += rec;
        fsum += (prec + rec) > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    }
    for (const auto& p : preds)
        if (!p.undecodable && !p.topk.empty() && p.topk.front().first == p.gold) ++correct;
    const double k = static_cast<double>(classes.size());
    return {static_cast<double>(correct) / static_cast<double>(preds.size()), psum / k, rsum / k,
            fsum / k};
}

double naive_hit_rate(const std::vector<Prediction>& preds, std::int64_t k) {
    int hits = 0;
    for (const auto& p : preds) {
        if (p.undecodable) continue;
        for (std::int64_t i = 0; i < k && i < static_cast<std::int64_t>(p.topk.size()); ++i)
            if (p.topk[static_cast<std::size_t>(i)].first == p.gold) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<Prediction> random_predictions(Rng& rng, const std::vector<std::string>& classes,
                                           std::int64_t k) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < n; ++i) {
        Prediction p;
        p.sample_id = "s" + std::to_string(i);
        p.gold = classes[rng.below(classes.size())];
        if (rng.below(12) == 0) {
            p.undecodable = true;
        } else {
            // k distinct candidates with non-increasing scores
            std::vector<std::string> pool = classes;
            shuffle(pool, rng);
            double score = 1.0;
            for (std::int64_t j = 0; j < k && j < static_cast<std::int64_t>(pool.size()); ++j) {
                score -= rng.uniform() * 0.1;
                p.topk.emplace_back(pool[static_cast<std::size_t>(j)], score);
            }
        }
        preds.push_back(std::move(p));
    }
    return preds;
}

}  // namespace

TEST_CASE("decode_prediction: exact target vector decodes to itself first") {
    Rng rng(1);
    const auto model = random_model(12, 5, rng);
    const auto urn = dsm::embed(model, "w3");
    const auto res = decode_prediction(urn, model, 5);
    REQUIRE(!res.undecodable);
    REQUIRE(res.topk.size() == 5);
    CHECK(res.topk[0].first == "w3");
    CHECK(res.topk[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decode_prediction: restriction forces the candidate set") {
    Rng rng(2);
    const auto model = random_model(12, 5, rng);
    const auto q = dsm::embed(model, "w0");
    const std::vector<std::string> labels = {"w5", "w6", "w7"};
    const auto res = decode_prediction(q, model, 5, &labels);
    CHECK(res.topk.size() == 3);
    for (const auto& [word, score] : res.topk)
        CHECK(std::find(labels.begin(), labels.end(), word) != labels.end());
}

TEST_CASE("decode_prediction: zero vector is undecodable, not fatal") {
    Rng rng(3);
    const auto model = random_model(6, 4, rng);
    const std::vector<float> zero(4, 0.0f);
    const auto res = decode_prediction(zero, model, 5);
    CHECK(res.undecodable);
    CHECK(res.topk.empty());
}

TEST_CASE("decode_prediction equals the dsm ranking") {
    Rng rng(4);
    for (int iter = 0; iter < 30; ++iter) {
        const auto model = random_model(2 + rng.below(20), 1 + rng.below(6), rng);
        std::vector<float> q(static_cast<std::size_t>(model.dim));
        for (auto& x : q) x = static_cast<float>(rng.uniform(-1.0, 1.0));
        if (std::all_of(q.begin(), q.end(), [](float x) { return x == 0.0f; })) continue;
        const auto res = decode_prediction(q, model, 4);
        const auto ref = dsm::nearest_neighbors(model, q, 4).items;
        REQUIRE(res.topk.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(res.topk[i].first == ref[i].word);
            CHECK(res.topk[i].second == ref[i].score);
        }
    }
}

TEST_CASE("topk_hit_rate: extremes and hand count") {
    std::vector<Prediction> all_hit;
    for (int i = 0; i < 4; ++i)
        all_hit.push_back({"s", "g", {{"g", 1.0}, {"x", 0.5}, {"y", 0.4}, {"z", 0.3}, {"q", 0.2}}, false});
    CHECK(topk_hit_rate(all_hit, 5) == 1.0);

    // 3 of 5 hit
    std::vector<Prediction> some;
    for (int i = 0; i < 5; ++i) {
        Prediction p{"s" + std::to_string(i), "g", {}, false};
        for (int j = 0; j < 5; ++j)
            p.topk.emplace_back(i < 3 && j == 2 ? "g" : "x" + std::to_string(j), 1.0 - 0.1 * j);
        some.push_back(std::move(p));
    }
    CHECK(topk_hit_rate(some, 5) == doctest::Approx(0.6));

    CHECK_THROWS_AS(topk_hit_rate({}, 5), ValidationError);
    std::vector<Prediction> short_list{{"s", "g", {{"a", 1.0}}, false}};
    CHECK_THROWS_AS(topk_hit_rate(short_list, 5), ValidationError);
}

TEST_CASE("top1_metrics: hand confusion fixture gold [a,a,b] / predicted [a,b,b]") {
    std::vector<Prediction> preds{
        {"1", "a", {{"a", 0.9}}, false},
        {"2", "a", {{"b", 0.8}}, false},
        {"3", "b", {{"b", 0.7}}, false},
    };
    const auto s = top1_metrics(preds, {"a", "b"});
    CHECK(s.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(s.per_class.at("a").precision == 1.0);
    CHECK(s.per_class.at("b").precision == 0.5);
    CHECK(s.per_class.at("a").recall == 0.5);
    CHECK(s.per_class.at("b").recall == 1.0);
    CHECK(s.per_class.at("a").f1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.per_class.at("b").f1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.macro_f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("top1_metrics: extremes") {
    std::vector<Prediction> right{{"1", "a", {{"a", 1.0}}, false}};
    const auto s1 = top1_metrics(right, {"a"});
    CHECK(s1.accuracy == 1.0);
    CHECK(s1.macro_f1 == 1.0);

    std::vector<Prediction> wrong{{"1", "a", {{"b", 1.0}}, false}};
    const auto s2 = top1_metrics(wrong, {"a", "b"});
    CHECK(s2.accuracy == 0.0);
    CHECK(s2.per_class.at("a").f1 == 0.0);
    CHECK(s2.per_class.at("a").no_predictions);

    std::vector<Prediction> unknown{{"1", "a", {{"zzz", 1.0}}, false}};
    CHECK_THROWS_WITH_AS(top1_metrics(unknown, {"a", "b"}), doctest::Contains("zzz"),
                         ValidationError);
}

TEST_CASE("metrics match the naive oracle on randomized prediction sets") {
    Rng rng(9);
    const std::vector<std::string> classes = {"a", "b", "c", "d", "e", "f"};
    for (int iter = 0; iter < 200; ++iter) {
        const auto preds = random_predictions(rng, classes, 5);
        const auto got = top1_metrics(preds, classes);
        const auto want = naive_top1(preds, classes);
        CHECK(got.accuracy == doctest::Approx(want.accuracy).epsilon(1e-12));
        CHECK(got.macro_precision == doctest::Approx(want.precision).epsilon(1e-12));
        CHECK(got.macro_recall == doctest::Approx(want.recall).epsilon(1e-12));
        CHECK(got.macro_f1 == doctest::Approx(want.f1).epsilon(1e-12));
        bool ok = true;
        for (const auto& p : preds)
            if (!p.undecodable && static_cast<std::int64_t>(p.topk.size()) < 3) ok = false;
        if (ok)
            CHECK(topk_hit_rate(preds, 3) == doctest::Approx(naive_hit_rate(preds, 3)).epsilon(1e-12));
    }
}

TEST_CASE("metrics are invariant under permutation of the prediction list") {
    Rng rng(10);
    const std::vector<std::string> classes = {"a", "b", "c"};
    auto preds = random_predictions(rng, classes, 3);
    const auto before = top1_metrics(preds, classes);
    shuffle(preds, rng);
    const auto after = top1_metrics(preds, classes);
    CHECK(before.accuracy == after.accuracy);
    CHECK(before.macro_f1 == after.macro_f1);
}

TEST_CASE("hit rate is monotonically non-decreasing in k") {
    Rng rng(11);
    const std::vector<std::string> classes = {"a", "b", "c", "d", "e"};
    for (int iter = 0; iter < 50; ++iter) {
        const auto preds = random_predictions(rng, classes, 5);
        bool complete = true;
        for (const auto& p : preds)
            if (!p.undecodable && p.topk.size() < 5) complete = false;
        if (!complete) continue;
        double prev = 0;
        for (std::int64_t k = 1; k <= 5; ++k) {
            const double rate = topk_hit_rate(preds, k);
            CHECK(rate >= prev);
            prev = rate;
        }
    }
}

TEST_CASE("restricting decoding to the label set never lowers the hit rate") {
    Rng rng(12);
    for (int iter = 0; iter < 40; ++iter) {
        const auto model = random_model(20, 4, rng);
        std::vector<std::string> labels;
        for (int i = 0; i < 6; ++i) labels.push_back("w" + std::to_string(i));
        std::vector<Prediction> open, restricted;
        for (int s = 0; s < 10; ++s) {
            std::vector<float> q(4);
            for (auto& x : q) x = static_cast<float>(rng.uniform(-1.0, 1.0));
            const std::string gold = labels[rng.below(labels.size())];
            auto o = decode_prediction(q, model, 3);
            auto r = decode_prediction(q, model, 3, &labels);
            open.push_back({"s", gold, std::move(o.topk), o.undecodable});
            restricted.push_back({"s", gold, std::move(r.topk), r.undecodable});
        }
        CHECK(topk_hit_rate(restricted, 3) >= topk_hit_rate(open, 3));
    }
}

TEST_CASE("complement identity holds exactly on mean reports") {
    Rng rng(13);
    std::vector<MetricsReport> reports;
    for (int f = 0; f < 5; ++f) {
        MetricsReport r;
        r.mode = "vector";
        r.samples = 10;
        r.top5_tpr = rng.uniform();
        r.top5_fpr = 1.0 - r.top5_tpr;
        reports.push_back(r);
    }
    const auto mean = mean_report(reports);
    CHECK(mean.top5_fpr == 1.0 - mean.top5_tpr);
}

TEST_CASE("complement identity in sum form for rational hit rates") {
    // hit rates are always hits/n; tpr + (1 - tpr) lands exactly on 1.0
    Rng rng(14);
    for (int iter = 0; iter < 500; ++iter) {
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.below(400));
        const std::int64_t hits = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n + 1)));
        const double tpr = static_cast<double>(hits) / static_cast<double>(n);
        const double fpr = 1.0 - tpr;
        CHECK(tpr + fpr == 1.0);
        CHECK(fpr == 1.0 - tpr);
    }
}

TEST_CASE("emit_reports writes all three files and round-trips") {
    const fs::path dir = fs::temp_directory_path() / "vsem_reports_test";
    fs::remove_all(dir);

    auto make_report = [](const std::string& mode, double acc) {
        MetricsReport r;
        r.mode = mode;
        r.samples = 4;
        r.top1_accuracy = acc;
        r.top1_precision = acc * 0.9;
        r.top1_recall = acc * 0.8;
        r.top1_f1 = acc * 0.85;
        r.top5_tpr = acc;
        r.top5_fpr = 1.0 - acc;
        r.per_class["a"] = {1.0, 0.5, 2.0 / 3.0, 2, false};
        return r;
    };
    std::vector<ModeEvaluation> modes(2);
    modes[0].mode = "vector";
    modes[0].per_fold = {make_report("vector", 0.75), make_report("vector", 0.5)};
    modes[0].mean = mean_report(modes[0].per_fold);
    modes[0].fold_predictions = {{{"img1", "gold", {{"w1", 0.9876}, {"w2", 0.5}}, false}}};
    modes[1].mode = "flat";
    modes[1].per_fold = {make_report("flat", 0.5)};
    modes[1].mean = mean_report(modes[1].per_fold);

    emit_reports(modes, dir.string(), 5);

    // CSV: header + 6 metric rows, two value columns
    std::ifstream csv(dir / "metrics.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "metric,vector,flat");
    std::vector<std::string> rows;
    while (std::getline(csv, line)) rows.push_back(line);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].rfind("top1_accuracy,", 0) == 0);
    CHECK(rows[5].rfind("top5_fpr,", 0) == 0);
    for (const auto& r : rows) CHECK(std::count(r.begin(), r.end(), ',') == 2);

    // JSON carries both modes and parses back to identical values
    std::ifstream jin(dir / "metrics.json");
    nlohmann::json parsed = nlohmann::json::parse(jin);
    CHECK(parsed["modes"]["vector"]["per_fold"].size() == 2);
    CHECK(parsed["modes"]["vector"]["mean"]["top1_accuracy"].get<double>() ==
          modes[0].mean.top1_accuracy);
    CHECK(parsed["modes"]["flat"]["mean"]["top5_fpr"].get<double>() == modes[1].mean.top5_fpr);
    CHECK(parsed["k"] == 5);

    // neighbors.txt lists the sample with 4-decimal cosines
    std::ifstream nb(dir / "neighbors.txt");
    std::string all((std::istreambuf_iterator<char>(nb)), std::istreambuf_iterator<char>());
    CHECK(all.find("img1\tgold\tw1 0.9876") != std::string::npos);

    CHECK_THROWS_AS(emit_reports({}, dir.string(), 5), ValidationError);
    fs::remove_all(dir);
}
