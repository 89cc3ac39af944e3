#include "vsem/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace fs = std::filesystem;

namespace vsem::eval {

DecodeResult decode_prediction(std::span<const float> vec, const dsm::EmbeddingModel& model,
                               std::int64_t k, const std::vector<std::string>* restrict_words) {
    DecodeResult result;
    double norm = 0;
    for (float x : vec) norm += static_cast<double>(x) * static_cast<double>(x);
    if (norm == 0.0) {
        result.undecodable = true;
        return result;
    }
    auto query = dsm::nearest_neighbors(model, vec, k, restrict_words);
    result.topk.reserve(query.items.size());
    for (auto& n : query.items) result.topk.emplace_back(std::move(n.word), n.score);
    return result;
}

double topk_hit_rate(const std::vector<Prediction>& predictions, std::int64_t k) {
    if (predictions.empty()) throw ValidationError("topk_hit_rate: empty prediction set");
    if (k < 1) throw ValidationError("topk_hit_rate: k must be >= 1");
    std::int64_t hits = 0;
    for (const auto& p : predictions) {
        if (p.undecodable) continue;  // counted as a miss
        if (static_cast<std::int64_t>(p.topk.size()) < k)
            throw ValidationError("topk_hit_rate: prediction for \"" + p.sample_id + "\" has " +
                                  std::to_string(p.topk.size()) + " candidates, need " +
                                  std::to_string(k));
        for (std::int64_t i = 0; i < k; ++i)
            if (p.topk[static_cast<std::size_t>(i)].first == p.gold) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

Top1Summary top1_metrics(const std::vector<Prediction>& predictions,
                         const std::vector<std::string>& classes) {
    if (predictions.empty()) throw ValidationError("top1_metrics: empty prediction set");
    if (classes.empty()) throw ValidationError("top1_metrics: empty class set");
    std::set<std::string> class_set(classes.begin(), classes.end());

    std::map<std::string, std::int64_t> tp, fp, fn, support;
    for (const auto& c : classes) tp[c] = fp[c] = fn[c] = support[c] = 0;

    std::int64_t correct = 0;
    for (const auto& p : predictions) {
        if (!class_set.count(p.gold))
            throw ValidationError("top1_metrics: unknown gold class \"" + p.gold + "\"");
        ++support[p.gold];
        if (p.undecodable || p.topk.empty()) {
            ++fn[p.gold];  // no prediction: miss, no false positive anywhere
            continue;
        }
        const std::string& pred = p.topk.front().first;
        if (!class_set.count(pred))
            throw ValidationError("top1_metrics: unknown predicted class \"" + pred + "\"");
        if (pred == p.gold) {
            ++correct;
            ++tp[p.gold];
        } else {
            ++fp[pred];
            ++fn[p.gold];
        }
    }

    Top1Summary s;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
    double psum = 0, rsum = 0, fsum = 0;
    for (const auto& c : classes) {
        PerClassMetrics m;
        m.support = support[c];
        const std::int64_t predicted = tp[c] + fp[c];
        m.no_predictions = predicted == 0;
        m.precision = predicted > 0 ? static_cast<double>(tp[c]) / static_cast<double>(predicted) : 0.0;
        const std::int64_t actual = tp[c] + fn[c];
        m.recall = actual > 0 ? static_cast<double>(tp[c]) / static_cast<double>(actual) : 0.0;
        m.f1 = (m.precision + m.recall) > 0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        psum += m.precision;
        rsum += m.recall;
        fsum += m.f1;
        s.per_class[c] = m;
    }
    const double k = static_cast<double>(classes.size());
    s.macro_precision = psum / k;
    s.macro_recall = rsum / k;
    s.macro_f1 = fsum / k;
    return s;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw ValidationError("mean_report: no fold reports");
    MetricsReport mean;
    mean.mode = reports.front().mode;
    mean.samples = reports.front().samples;
    const double n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        mean.top1_accuracy += r.top1_accuracy / n;
        mean.top1_precision += r.top1_precision / n;
        mean.top1_recall += r.top1_recall / n;
        mean.top1_f1 += r.top1_f1 / n;
        mean.top5_tpr += r.top5_tpr / n;
        for (const auto& [c, m] : r.per_class) {
            auto& acc = mean.per_class[c];
            acc.precision += m.precision / n;
            acc.recall += m.recall / n;
            acc.f1 += m.f1 / n;
            acc.support = m.support;
            acc.no_predictions = acc.no_predictions || m.no_predictions;
        }
    }
    mean.top5_fpr = 1.0 - mean.top5_tpr;
    return mean;
}

namespace {

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["mode"] = r.mode;
    j["top1_accuracy"] = r.top1_accuracy;
    j["top1_precision"] = r.top1_precision;
    j["top1_recall"] = r.top1_recall;
    j["top1_f1"] = r.top1_f1;
    j["top5_tpr"] = r.top5_tpr;
    j["top5_fpr"] = r.top5_fpr;
    j["samples"] = r.samples;
    nlohmann::json pc;
    for (const auto& [c, m] : r.per_class) {
        nlohmann::json e;
        e["precision"] = m.precision;
        e["recall"] = m.recall;
        e["f1"] = m.f1;
        e["support"] = m.support;
        e["no_predictions"] = m.no_predictions;
        pc[c] = e;
    }
    j["per_class"] = pc;
    return j;
}

std::string fmt4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

}  // namespace

void emit_reports(const std::vector<ModeEvaluation>& modes, const std::string& out_dir,
                  std::int64_t k) {
    if (modes.empty()) throw ValidationError("emit_reports: nothing to report");
    for (const auto& m : modes)
        if (m.per_fold.empty()) throw ValidationError("emit_reports: mode " + m.mode + " has no folds");
    fs::create_directories(out_dir);

    nlohmann::json root;
    root["k"] = k;
    root["averaging"] = "macro";
    nlohmann::json jmodes;
    for (const auto& m : modes) {
        nlohmann::json jm;
        auto folds = nlohmann::json::array();
        for (const auto& r : m.per_fold) folds.push_back(report_to_json(r));
        jm["per_fold"] = folds;
        jm["mean"] = report_to_json(m.mean);
        jmodes[m.mode] = jm;
    }
    root["modes"] = jmodes;
    const std::string json_path = (fs::path(out_dir) / "metrics.json").string();
    std::ofstream jout(json_path);
    if (!jout) throw IoError("cannot write " + json_path);
    jout << root.dump(2) << "\n";
    if (!jout) throw IoError("write failed: " + json_path);

    const MetricsReport* vec = nullptr;
    const MetricsReport* flat = nullptr;
    for (const auto& m : modes) {
        if (m.mode == "vector") vec = &m.mean;
        if (m.mode == "flat") flat = &m.mean;
    }
    const std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path);
    csv << "metric,vector,flat\n";
    auto row = [&](const char* name, double MetricsReport::* field) {
        csv << name << "," << (vec ? fmt4(vec->*field) : "") << ","
            << (flat ? fmt4(flat->*field) : "") << "\n";
    };
    row("top1_accuracy", &MetricsReport::top1_accuracy);
    row("top1_precision", &MetricsReport::top1_precision);
    row("top1_recall", &MetricsReport::top1_recall);
    row("top1_f1", &MetricsReport::top1_f1);
    row("top5_tpr", &MetricsReport::top5_tpr);
    row("top5_fpr", &MetricsReport::top5_fpr);
    if (!csv) throw IoError("write failed: " + csv_path);

    const std::string nb_path = (fs::path(out_dir) / "neighbors.txt").string();
    std::ofstream nb(nb_path);
    if (!nb) throw IoError("cannot write " + nb_path);
    for (const auto& m : modes) {
        for (std::size_t f = 0; f < m.fold_predictions.size(); ++f) {
            nb << "# " << m.mode << " fold " << f << "\n";
            for (const auto& p : m.fold_predictions[f]) {
                nb << p.sample_id << "\t" << p.gold << "\t";
                if (p.undecodable) {
                    nb << "<undecodable>";
                } else {
                    for (std::size_t i = 0; i < p.topk.size(); ++i) {
                        if (i) nb << " ";
                        nb << p.topk[i].first << " " << fmt4(p.topk[i].second);
                    }
                }
                nb << "\n";
            }
        }
    }
    if (!nb) throw IoError("write failed: " + nb_path);
}

FoldEvaluation evaluate_fold(net::TrainState<float>& state, const exp::DatasetManifest& manifest,
                             const std::vector<Tensor<float>>& images,
                             const std::vector<std::int64_t>& eval_indices, exp::Mode mode,
                             const dsm::EmbeddingModel* model,
                             const std::map<std::string, std::string>& label_map,
                             const EvalOptions& options) {
    if (eval_indices.empty()) throw ValidationError("evaluate_fold: empty evaluation split");
    if (mode == exp::Mode::Vector && !model)
        throw ValidationError("evaluate_fold: vector mode requires a DSM model");

    // word -> label, for mapping restricted decodes back to classes
    std::map<std::string, std::string> inverse_map;
    std::vector<std::string> target_words;
    if (mode == exp::Mode::Vector) {
        for (const auto& label : manifest.classes) {
            auto it = label_map.find(label);
            if (it == label_map.end())
                throw ValidationError("evaluate_fold: label \"" + label + "\" missing from label map");
            if (!inverse_map.emplace(it->second, label).second)
                throw ValidationError("evaluate_fold: two labels share target word \"" +
                                      it->second + "\"");
            target_words.push_back(it->second);
        }
    }

    const std::int64_t S = state.spec.height;
    const std::int64_t D = state.shapes.back().f;

    FoldEvaluation out;
    std::vector<Prediction> top1_preds;
    constexpr std::size_t kEvalBatch = 32;
    std::size_t pos = 0;
    while (pos < eval_indices.size()) {
        const std::size_t hi = std::min(pos + kEvalBatch, eval_indices.size());
        const std::int64_t B = static_cast<std::int64_t>(hi - pos);
        Tensor<float> x({B, S, S, 3});
        for (std::size_t b = 0; b < static_cast<std::size_t>(B); ++b) {
            const auto& im = images[static_cast<std::size_t>(eval_indices[pos + b])];
            std::copy(im.v.begin(), im.v.end(),
                      x.v.begin() + static_cast<std::ptrdiff_t>(b * im.v.size()));
        }
        Tensor<float> y = net::forward(state, x, /*training=*/false);

        for (std::size_t b = 0; b < static_cast<std::size_t>(B); ++b) {
            const std::int64_t idx = eval_indices[pos + b];
            const auto& entry = manifest.entries[static_cast<std::size_t>(idx)];
            const float* row = &y.v[b * static_cast<std::size_t>(D)];

            if (mode == exp::Mode::Vector) {
                const std::string gold_word = label_map.at(entry.label);
                auto open = decode_prediction({row, static_cast<std::size_t>(D)}, *model,
                                              options.k, nullptr);
                out.open_predictions.push_back(
                    {entry.image_path, gold_word, std::move(open.topk), open.undecodable});

                Prediction t1;
                t1.sample_id = entry.image_path;
                t1.gold = entry.label;
                auto restricted = decode_prediction(
                    {row, static_cast<std::size_t>(D)}, *model, 1,
                    options.restrict_top1 ? &target_words : nullptr);
                if (restricted.undecodable || restricted.topk.empty()) {
                    t1.undecodable = true;
                } else {
                    auto it = inverse_map.find(restricted.topk.front().first);
                    if (it == inverse_map.end())
                        t1.undecodable = true;  // open-vocabulary word outside the label set
                    else
                        t1.topk.emplace_back(it->second, restricted.topk.front().second);
                }
                top1_preds.push_back(std::move(t1));
            } else {
                // rank classes by probability, ties by class index
                std::vector<std::int64_t> order(manifest.classes.size());
                for (std::size_t c = 0; c < order.size(); ++c)
                    order[c] = static_cast<std::int64_t>(c);
                std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
                    const float pa = row[a], pb = row[b];
                    if (pa != pb) return pa > pb;
                    return a < b;
                });
                Prediction p;
                p.sample_id = entry.image_path;
                p.gold = entry.label;
                const std::int64_t kk =
                    std::min<std::int64_t>(options.k, static_cast<std::int64_t>(order.size()));
                for (std::int64_t i = 0; i < kk; ++i)
                    p.topk.emplace_back(manifest.classes[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])],
                                        static_cast<double>(row[order[static_cast<std::size_t>(i)]]));
                top1_preds.push_back(p);
                out.open_predictions.push_back(std::move(p));
            }
        }
        pos = hi;
    }

    MetricsReport& r = out.report;
    r.mode = mode == exp::Mode::Vector ? "vector" : "flat";
    r.samples = static_cast<std::int64_t>(eval_indices.size());
    const std::int64_t k_eff =
        mode == exp::Mode::Flat
            ? std::min<std::int64_t>(options.k, static_cast<std::int64_t>(manifest.classes.size()))
            : options.k;
    r.top5_tpr = topk_hit_rate(out.open_predictions, k_eff);
    r.top5_fpr = 1.0 - r.top5_tpr;
    auto t1 = top1_metrics(top1_preds, manifest.classes);
    r.top1_accuracy = t1.accuracy;
    r.top1_precision = t1.macro_precision;
    r.top1_recall = t1.macro_recall;
    r.top1_f1 = t1.macro_f1;
    r.per_class = std::move(t1.per_class);
    return out;
}

}  // namespace vsem::eval
