#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsem/tensor.hpp"

namespace vsem::img {

// 8-bit RGB raster, row-major HWC
struct Image {
    std::int64_t height = 0, width = 0;
    std::vector<std::uint8_t> rgb;
};

// binary PPM (P6), maxval 255
Image read_ppm(const std::string& path);
void write_ppm(const Image& image, const std::string& path);

// (H,W,3) floats in [0,1]
Tensor<float> to_tensor(const Image& image);

// pixel-center-aligned bilinear interpolation
Tensor<float> resize_bilinear(const Tensor<float>& hwc, std::int64_t out_h, std::int64_t out_w);

// decode + resize + scale, the ingestion path used for training
Tensor<float> load_image_tensor(const std::string& path, std::int64_t size);

}  // namespace vsem::img
