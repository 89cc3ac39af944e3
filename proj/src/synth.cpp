#include "vsem/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "vsem/common.hpp"
#include "vsem/image.hpp"

namespace fs = std::filesystem;

namespace vsem::synth {

namespace {

struct ShapeClass {
    std::string label;
    int kind;  // 0 disk, 1 square, 2 triangle
    std::array<int, 3> color;
    std::vector<std::string> satellites;
};

const char* kBaseNames[3] = {"disk", "square", "triangle"};
const std::array<int, 3> kBaseColors[3] = {{200, 50, 50}, {50, 180, 60}, {60, 70, 210}};
const std::vector<std::string> kBaseSatellites[3] = {
    {"round", "circular", "curved", "smooth", "rolling", "radial"},
    {"boxy", "angular", "cornered", "straight", "gridded", "blocky"},
    {"pointed", "sharp", "sloped", "peaked", "angled", "wedged"},
};
const std::vector<std::string> kFillers = {"object", "item", "form", "figure", "piece", "thing"};

std::vector<ShapeClass> make_classes(std::int64_t n) {
    std::vector<ShapeClass> classes;
    for (std::int64_t i = 0; i < n; ++i) {
        ShapeClass c;
        const int kind = static_cast<int>(i % 3);
        const std::int64_t gen = i / 3;
        c.kind = kind;
        c.label = kBaseNames[kind] + (gen == 0 ? "" : std::to_string(gen + 1));
        c.color = kBaseColors[kind];
        // later generations of the same shape get shifted colors
        for (auto& ch : c.color) ch = static_cast<int>((ch + 60 * gen) % 230);
        if (gen == 0) {
            c.satellites = kBaseSatellites[kind];
        } else {
            for (int j = 0; j < 6; ++j)
                c.satellites.push_back(c.label + "_trait" + std::to_string(j));
        }
        classes.push_back(std::move(c));
    }
    return classes;
}

std::uint8_t clamp_byte(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

img::Image draw_shape(const ShapeClass& cls, std::int64_t size, Rng& rng) {
    img::Image im;
    im.height = size;
    im.width = size;
    im.rgb.resize(static_cast<std::size_t>(size * size * 3));
    std::array<int, 3> fg = cls.color;
    for (auto& ch : fg) ch += static_cast<int>(rng.below(51)) - 25;  // color jitter

    const double cx = static_cast<double>(size) / 2.0 +
                      (rng.uniform() - 0.5) * static_cast<double>(size) / 4.0;
    const double cy = static_cast<double>(size) / 2.0 +
                      (rng.uniform() - 0.5) * static_cast<double>(size) / 4.0;
    const double r = std::max(3.0, static_cast<double>(size) / 4.0 +
                                       (rng.uniform() - 0.5) * static_cast<double>(size) / 5.0);

    for (std::int64_t y = 0; y < size; ++y)
        for (std::int64_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            bool inside = false;
            switch (cls.kind) {
                case 0: inside = dx * dx + dy * dy <= r * r; break;
                case 1: inside = std::abs(dx) <= r && std::abs(dy) <= r; break;
                default: {
                    // upward triangle: width grows linearly from apex to base
                    const double t = (dy + r) / (2.0 * r);
                    inside = t >= 0 && t <= 1 && std::abs(dx) <= r * t;
                    break;
                }
            }
            for (int c = 0; c < 3; ++c) {
                const int noise = static_cast<int>(rng.below(25)) - 12;
                const int base = inside ? fg[static_cast<std::size_t>(c)] : 225;
                im.rgb[static_cast<std::size_t>((y * size + x) * 3 + c)] = clamp_byte(base + noise);
            }
        }
    return im;
}

constexpr int kSentencesPerClass = 160;

void write_corpus(const fs::path& dir, const std::vector<ShapeClass>& classes, Rng& rng) {
    fs::create_directories(dir);
    for (const auto& cls : classes) {
        std::ofstream out(dir / (cls.label + ".txt"), std::ios::binary);
        if (!out) throw IoError("cannot write corpus file for " + cls.label);
        for (int s = 0; s < kSentencesPerClass; ++s) {
            const auto& sat = cls.satellites;
            const std::string& s1 = sat[rng.below(sat.size())];
            const std::string& s2 = sat[rng.below(sat.size())];
            const std::string& fill = kFillers[rng.below(kFillers.size())];
            switch (rng.below(4)) {
                case 0:
                    out << "the " << cls.label << " is " << s1 << " and " << s2 << ".\n";
                    break;
                case 1:
                    out << "a " << s1 << " " << cls.label << " sits near the " << s2 << " " << fill
                        << ".\n";
                    break;
                case 2:
                    out << "every " << cls.label << " looks " << s1 << " and rather " << s2
                        << ".\n";
                    break;
                default:
                    out << "this " << s1 << " and " << s2 << " " << cls.label << " was a " << fill
                        << ".\n";
                    break;
            }
        }
        if (!out) throw IoError("corpus write failed for " + cls.label);
    }
}

const char* kFixtureConfig = R"({
  "seed": 42,
  "textprep": { "numbers_to_sentinel": true },
  "dsm": {
    "dim": 16, "window": 4, "min_count": 5, "negatives": 5,
    "epochs": 40, "initial_lr": 0.025, "noise_exponent": 0.75,
    "subsample_threshold": 0.0, "parallel": false
  },
  "network": {
    "image_size": 32, "conv_filters": [16, 32, 32], "dense_units": 128,
    "conv_dropout": 0.25, "dense_dropout": 0.5
  },
  "training": {
    "batch_size": 16, "max_epochs": 25, "learning_rate": 0.001,
    "rho": 0.9, "epsilon": 1e-7, "patience": 4, "min_delta": 0.0001
  },
  "evaluation": { "k": 5, "restrict_top1": true }
}
)";

}  // namespace

void generate_fixture(const std::string& out_dir, const SynthParams& params) {
    if (params.classes < 1) throw ValidationError("synth: classes must be >= 1");
    if (params.per_class < 1) throw ValidationError("synth: per_class must be >= 1");
    if (params.image_size < 8) throw ValidationError("synth: image_size must be >= 8");
    const fs::path root(out_dir);
    if (fs::exists(root) && !fs::is_empty(root))
        throw ValidationError("synth: output directory is not empty: " + out_dir);
    fs::create_directories(root / "images");

    const auto classes = make_classes(params.classes);
    Rng img_rng(derive_seed(params.seed, 1));
    Rng text_rng(derive_seed(params.seed, 2));

    std::ofstream manifest(root / "manifest.csv", std::ios::binary);
    if (!manifest) throw IoError("cannot write manifest.csv");
    manifest << "path,label\n";
    for (const auto& cls : classes) {
        for (std::int64_t i = 0; i < params.per_class; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%03lld.ppm", cls.label.c_str(),
                          static_cast<long long>(i));
            const img::Image im = draw_shape(cls, params.image_size, img_rng);
            img::write_ppm(im, (root / "images" / name).string());
            manifest << "images/" << name << "," << cls.label << "\n";
        }
    }
    if (!manifest) throw IoError("manifest write failed");

    std::ofstream labelmap(root / "labelmap.csv", std::ios::binary);
    if (!labelmap) throw IoError("cannot write labelmap.csv");
    labelmap << "label,target_word\n";
    for (const auto& cls : classes) labelmap << cls.label << "," << cls.label << "\n";
    if (!labelmap) throw IoError("labelmap write failed");

    write_corpus(root / "corpus", classes, text_rng);

    std::ofstream cfg(root / "config.json", std::ios::binary);
    if (!cfg) throw IoError("cannot write config.json");
    cfg << kFixtureConfig;
    if (!cfg) throw IoError("config write failed");
}

}  // namespace vsem::synth
