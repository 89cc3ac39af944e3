#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace vsem {

// Dense row-major N-d array. float for training, double for gradient checks.
template <typename T>
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s)
        : shape(std::move(s)), v(static_cast<std::size_t>(numel_of(shape)), T(0)) {}
    Tensor(std::vector<std::int64_t> s, std::vector<T> values)
        : shape(std::move(s)), v(std::move(values)) {}

    static std::int64_t numel_of(const std::vector<std::int64_t>& s) {
        std::int64_t n = 1;
        for (auto e : s) n *= e;
        return n;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    // flat index helpers for the layouts used here: (N,H,W,C) and (N,F)
    std::int64_t idx4(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) const {
        return ((n * shape[1] + y) * shape[2] + x) * shape[3] + c;
    }
    std::int64_t idx2(std::int64_t n, std::int64_t f) const { return n * shape[1] + f; }

    T& at4(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) {
        return v[static_cast<std::size_t>(idx4(n, y, x, c))];
    }
    T at4(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) const {
        return v[static_cast<std::size_t>(idx4(n, y, x, c))];
    }
    T& at2(std::int64_t n, std::int64_t f) { return v[static_cast<std::size_t>(idx2(n, f))]; }
    T at2(std::int64_t n, std::int64_t f) const { return v[static_cast<std::size_t>(idx2(n, f))]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool operator==(const Tensor& o) const { return shape == o.shape && v == o.v; }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace vsem
