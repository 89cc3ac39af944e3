#pragma once

#include <cstdint>
#include <string>

namespace vsem::synth {

// Procedural fixture standing in for the original corpora: PPM images of
// simple shape classes plus a synthetic text corpus whose class words
// co-occur with class-specific satellite words. Deterministic given seed.
struct SynthParams {
    std::int64_t classes = 3;
    std::int64_t per_class = 40;
    std::int64_t image_size = 32;
    std::uint64_t seed = 42;
};

// Writes images/, manifest.csv, labelmap.csv, corpus/ and a config.json tuned
// for the fixture. Refuses a non-empty out_dir.
void generate_fixture(const std::string& out_dir, const SynthParams& params);

}  // namespace vsem::synth
