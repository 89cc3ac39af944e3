#include "vsem/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vsem/common.hpp"

namespace vsem::img {

namespace {

// next whitespace-separated field, skipping '#' comments per the PPM spec
std::string next_field(std::istream& in, const std::string& path) {
    std::string field;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!field.empty()) return field;
            continue;
        }
        field += static_cast<char>(c);
    }
    if (field.empty()) throw FormatError(path + ": truncated PPM header");
    return field;
}

std::int64_t parse_int(const std::string& s, const std::string& path, const char* what) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == nullptr || *end != '\0' || v < 0)
        throw FormatError(path + ": bad PPM " + what + " \"" + s + "\"");
    return v;
}

}  // namespace

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    if (next_field(in, path) != "P6") throw FormatError(path + ": not a P6 PPM file");
    Image im;
    im.width = parse_int(next_field(in, path), path, "width");
    im.height = parse_int(next_field(in, path), path, "height");
    const std::int64_t maxval = parse_int(next_field(in, path), path, "maxval");
    if (im.width < 1 || im.height < 1) throw FormatError(path + ": empty image");
    if (maxval != 255) throw FormatError(path + ": unsupported maxval " + std::to_string(maxval));
    // next_field consumed exactly one whitespace byte after maxval
    im.rgb.resize(static_cast<std::size_t>(im.width * im.height * 3));
    if (!in.read(reinterpret_cast<char*>(im.rgb.data()),
                 static_cast<std::streamsize>(im.rgb.size())))
        throw FormatError(path + ": truncated pixel data");
    return im;
}

void write_ppm(const Image& image, const std::string& path) {
    if (image.rgb.size() != static_cast<std::size_t>(image.width * image.height * 3))
        throw ValidationError("write_ppm: pixel buffer does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<std::streamsize>(image.rgb.size()));
    if (!out) throw IoError("write failed: " + path);
}

Tensor<float> to_tensor(const Image& image) {
    Tensor<float> t({image.height, image.width, 3});
    for (std::size_t i = 0; i < image.rgb.size(); ++i)
        t.v[i] = static_cast<float>(image.rgb[i]) / 255.0f;
    return t;
}

Tensor<float> resize_bilinear(const Tensor<float>& hwc, std::int64_t out_h, std::int64_t out_w) {
    const std::int64_t H = hwc.shape[0], W = hwc.shape[1], C = hwc.shape[2];
    if (out_h < 1 || out_w < 1) throw ValidationError("resize_bilinear: bad target size");
    Tensor<float> out({out_h, out_w, C});
    const double sy = static_cast<double>(H) / static_cast<double>(out_h);
    const double sx = static_cast<double>(W) / static_cast<double>(out_w);
    for (std::int64_t y = 0; y < out_h; ++y) {
        const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        const std::int64_t y0 = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor(fy)), 0, H - 1);
        const std::int64_t y1 = std::min<std::int64_t>(y0 + 1, H - 1);
        const double wy = std::clamp(fy - static_cast<double>(y0), 0.0, 1.0);
        for (std::int64_t x = 0; x < out_w; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            const std::int64_t x0 = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor(fx)), 0, W - 1);
            const std::int64_t x1 = std::min<std::int64_t>(x0 + 1, W - 1);
            const double wx = std::clamp(fx - static_cast<double>(x0), 0.0, 1.0);
            for (std::int64_t c = 0; c < C; ++c) {
                const double v00 = hwc.v[static_cast<std::size_t>((y0 * W + x0) * C + c)];
                const double v01 = hwc.v[static_cast<std::size_t>((y0 * W + x1) * C + c)];
                const double v10 = hwc.v[static_cast<std::size_t>((y1 * W + x0) * C + c)];
                const double v11 = hwc.v[static_cast<std::size_t>((y1 * W + x1) * C + c)];
                const double top = v00 + (v01 - v00) * wx;
                const double bot = v10 + (v11 - v10) * wx;
                out.v[static_cast<std::size_t>((y * out_w + x) * C + c)] =
                    static_cast<float>(top + (bot - top) * wy);
            }
        }
    }
    return out;
}

Tensor<float> load_image_tensor(const std::string& path, std::int64_t size) {
    Tensor<float> t = to_tensor(read_ppm(path));
    if (t.shape[0] != size || t.shape[1] != size) t = resize_bilinear(t, size, size);
    return t;
}

}  // namespace vsem::img
