#pragma once

#include <cstdint>
#include <vector>

#include "vsem/tensor.hpp"

// Forward/backward compute kernels for the network layers. Each kernel exists
// twice: a plain serial loop nest (reference) and an OpenMP version. The
// OpenMP versions parallelize only over disjoint output elements and keep the
// per-element accumulation order identical to the serial code, so the two
// backends produce bit-identical results for any thread count.
//
// Layouts: activations (N,H,W,C) / (N,F); conv weights (KH,KW,Cin,Cout);
// dense weights (In,Out). Convolutions are stride 1 with same padding,
// max pooling is 2x2 stride 2 (trailing odd row/col dropped).

namespace vsem::kernels {

enum class Backend { Serial, Parallel };

namespace detail {

template <typename T>
inline void conv_forward_row(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b,
                             Tensor<T>& out, std::int64_t n, std::int64_t y) {
    const std::int64_t H = in.shape[1], W = in.shape[2], Ci = in.shape[3];
    const std::int64_t KH = w.shape[0], KW = w.shape[1], Co = w.shape[3];
    const std::int64_t py = (KH - 1) / 2, px = (KW - 1) / 2;
    for (std::int64_t x = 0; x < W; ++x) {
        T* orow = &out.v[static_cast<std::size_t>(out.idx4(n, y, x, 0))];
        for (std::int64_t co = 0; co < Co; ++co) orow[co] = b.v[static_cast<std::size_t>(co)];
        for (std::int64_t ky = 0; ky < KH; ++ky) {
            const std::int64_t iy = y + ky - py;
            if (iy < 0 || iy >= H) continue;
            for (std::int64_t kx = 0; kx < KW; ++kx) {
                const std::int64_t ix = x + kx - px;
                if (ix < 0 || ix >= W) continue;
                const T* irow = &in.v[static_cast<std::size_t>(in.idx4(n, iy, ix, 0))];
                const T* wrow = &w.v[static_cast<std::size_t>(((ky * KW + kx) * Ci) * Co)];
                for (std::int64_t ci = 0; ci < Ci; ++ci) {
                    const T a = irow[ci];
                    const T* wk = wrow + ci * Co;
                    for (std::int64_t co = 0; co < Co; ++co) orow[co] += a * wk[co];
                }
            }
        }
    }
}

template <typename T>
inline void conv_backward_input_row(const Tensor<T>& dout, const Tensor<T>& w, Tensor<T>& din,
                                    std::int64_t n, std::int64_t iy) {
    const std::int64_t H = din.shape[1], W = din.shape[2], Ci = din.shape[3];
    const std::int64_t KH = w.shape[0], KW = w.shape[1], Co = w.shape[3];
    const std::int64_t py = (KH - 1) / 2, px = (KW - 1) / 2;
    for (std::int64_t ix = 0; ix < W; ++ix) {
        T* drow = &din.v[static_cast<std::size_t>(din.idx4(n, iy, ix, 0))];
        for (std::int64_t ci = 0; ci < Ci; ++ci) drow[ci] = T(0);
        // output position y receives input iy at kernel row ky = iy - y + py
        for (std::int64_t ky = 0; ky < KH; ++ky) {
            const std::int64_t y = iy - ky + py;
            if (y < 0 || y >= H) continue;
            for (std::int64_t kx = 0; kx < KW; ++kx) {
                const std::int64_t x = ix - kx + px;
                if (x < 0 || x >= W) continue;
                const T* grow = &dout.v[static_cast<std::size_t>(dout.idx4(n, y, x, 0))];
                const T* wrow = &w.v[static_cast<std::size_t>(((ky * KW + kx) * Ci) * Co)];
                for (std::int64_t ci = 0; ci < Ci; ++ci) {
                    const T* wk = wrow + ci * Co;
                    T s = T(0);
                    for (std::int64_t co = 0; co < Co; ++co) s += grow[co] * wk[co];
                    drow[ci] += s;
                }
            }
        }
    }
}

// gradient for one (ky,kx,ci) slice of the conv weights, summed over the batch
template <typename T>
inline void conv_backward_weight_slice(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& dw,
                                       std::int64_t ky, std::int64_t kx, std::int64_t ci) {
    const std::int64_t N = in.shape[0], H = in.shape[1], W = in.shape[2], Ci = in.shape[3];
    const std::int64_t KW = dw.shape[1], Co = dw.shape[3];
    const std::int64_t py = (dw.shape[0] - 1) / 2, px = (KW - 1) / 2;
    T* dwrow = &dw.v[static_cast<std::size_t>(((ky * KW + kx) * Ci + ci) * Co)];
    for (std::int64_t co = 0; co < Co; ++co) dwrow[co] = T(0);
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t y = 0; y < H; ++y) {
            const std::int64_t iy = y + ky - py;
            if (iy < 0 || iy >= H) continue;
            for (std::int64_t x = 0; x < W; ++x) {
                const std::int64_t ix = x + kx - px;
                if (ix < 0 || ix >= W) continue;
                const T a = in.at4(n, iy, ix, ci);
                const T* grow = &dout.v[static_cast<std::size_t>(dout.idx4(n, y, x, 0))];
                for (std::int64_t co = 0; co < Co; ++co) dwrow[co] += a * grow[co];
            }
        }
}

template <typename T>
inline void conv_backward_bias_one(const Tensor<T>& dout, Tensor<T>& db, std::int64_t co) {
    const std::int64_t N = dout.shape[0], H = dout.shape[1], W = dout.shape[2], Co = dout.shape[3];
    T s = T(0);
    const T* g = dout.data();
    const std::int64_t total = N * H * W;
    for (std::int64_t i = 0; i < total; ++i) s += g[i * Co + co];
    db.v[static_cast<std::size_t>(co)] = s;
}

template <typename T>
inline void dense_forward_row(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b,
                              Tensor<T>& out, std::int64_t n) {
    const std::int64_t I = w.shape[0], O = w.shape[1];
    T* orow = &out.v[static_cast<std::size_t>(n * O)];
    for (std::int64_t o = 0; o < O; ++o) orow[o] = b.v[static_cast<std::size_t>(o)];
    const T* irow = &in.v[static_cast<std::size_t>(n * I)];
    for (std::int64_t i = 0; i < I; ++i) {
        const T a = irow[i];
        const T* wrow = &w.v[static_cast<std::size_t>(i * O)];
        for (std::int64_t o = 0; o < O; ++o) orow[o] += a * wrow[o];
    }
}

template <typename T>
inline void dense_backward_input_row(const Tensor<T>& dout, const Tensor<T>& w, Tensor<T>& din,
                                     std::int64_t n) {
    const std::int64_t I = w.shape[0], O = w.shape[1];
    T* drow = &din.v[static_cast<std::size_t>(n * I)];
    const T* grow = &dout.v[static_cast<std::size_t>(n * O)];
    for (std::int64_t i = 0; i < I; ++i) {
        const T* wrow = &w.v[static_cast<std::size_t>(i * O)];
        T s = T(0);
        for (std::int64_t o = 0; o < O; ++o) s += grow[o] * wrow[o];
        drow[i] = s;
    }
}

template <typename T>
inline void dense_backward_weight_row(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& dw,
                                      std::int64_t i) {
    const std::int64_t N = in.shape[0], I = in.shape[1], O = dout.shape[1];
    T* dwrow = &dw.v[static_cast<std::size_t>(i * O)];
    for (std::int64_t o = 0; o < O; ++o) dwrow[o] = T(0);
    for (std::int64_t n = 0; n < N; ++n) {
        const T a = in.v[static_cast<std::size_t>(n * I + i)];
        const T* grow = &dout.v[static_cast<std::size_t>(n * O)];
        for (std::int64_t o = 0; o < O; ++o) dwrow[o] += a * grow[o];
    }
}

template <typename T>
inline void dense_backward_bias_one(const Tensor<T>& dout, Tensor<T>& db, std::int64_t o) {
    const std::int64_t N = dout.shape[0], O = dout.shape[1];
    T s = T(0);
    for (std::int64_t n = 0; n < N; ++n) s += dout.v[static_cast<std::size_t>(n * O + o)];
    db.v[static_cast<std::size_t>(o)] = s;
}

template <typename T>
inline void maxpool_forward_row(const Tensor<T>& in, Tensor<T>& out,
                                std::vector<std::int64_t>& argmax, std::int64_t n,
                                std::int64_t oy) {
    const std::int64_t C = in.shape[3];
    const std::int64_t OW = out.shape[2];
    for (std::int64_t ox = 0; ox < OW; ++ox)
        for (std::int64_t c = 0; c < C; ++c) {
            std::int64_t best = in.idx4(n, oy * 2, ox * 2, c);
            T bv = in.v[static_cast<std::size_t>(best)];
            for (std::int64_t ky = 0; ky < 2; ++ky)
                for (std::int64_t kx = 0; kx < 2; ++kx) {
                    const std::int64_t idx = in.idx4(n, oy * 2 + ky, ox * 2 + kx, c);
                    const T val = in.v[static_cast<std::size_t>(idx)];
                    if (val > bv) {  // first window element wins ties
                        bv = val;
                        best = idx;
                    }
                }
            const std::int64_t oidx = out.idx4(n, oy, ox, c);
            out.v[static_cast<std::size_t>(oidx)] = bv;
            argmax[static_cast<std::size_t>(oidx)] = best;
        }
}

}  // namespace detail

namespace serial {

template <typename T>
void conv2d_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& out) {
    for (std::int64_t n = 0; n < in.shape[0]; ++n)
        for (std::int64_t y = 0; y < in.shape[1]; ++y)
            detail::conv_forward_row(in, w, b, out, n, y);
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& dout, const Tensor<T>& w, Tensor<T>& din) {
    for (std::int64_t n = 0; n < din.shape[0]; ++n)
        for (std::int64_t iy = 0; iy < din.shape[1]; ++iy)
            detail::conv_backward_input_row(dout, w, din, n, iy);
}

template <typename T>
void conv2d_backward_params(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& dw,
                            Tensor<T>& db) {
    for (std::int64_t ky = 0; ky < dw.shape[0]; ++ky)
        for (std::int64_t kx = 0; kx < dw.shape[1]; ++kx)
            for (std::int64_t ci = 0; ci < dw.shape[2]; ++ci)
                detail::conv_backward_weight_slice(in, dout, dw, ky, kx, ci);
    for (std::int64_t co = 0; co < db.shape[0]; ++co) detail::conv_backward_bias_one(dout, db, co);
}

template <typename T>
void dense_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& out) {
    for (std::int64_t n = 0; n < in.shape[0]; ++n) detail::dense_forward_row(in, w, b, out, n);
}

template <typename T>
void dense_backward_input(const Tensor<T>& dout, const Tensor<T>& w, Tensor<T>& din) {
    for (std::int64_t n = 0; n < din.shape[0]; ++n)
        detail::dense_backward_input_row(dout, w, din, n);
}

template <typename T>
void dense_backward_params(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& dw,
                           Tensor<T>& db) {
    for (std::int64_t i = 0; i < dw.shape[0]; ++i)
        detail::dense_backward_weight_row(in, dout, dw, i);
    for (std::int64_t o = 0; o < db.shape[0]; ++o) detail::dense_backward_bias_one(dout, db, o);
}

template <typename T>
void maxpool2d_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<std::int64_t>& argmax) {
    for (std::int64_t n = 0; n < out.shape[0]; ++n)
        for (std::int64_t oy = 0; oy < out.shape[1]; ++oy)
            detail::maxpool_forward_row(in, out, argmax, n, oy);
}

template <typename T>
void relu_forward(const Tensor<T>& in, Tensor<T>& out) {
    const std::int64_t n = in.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const T x = in.v[static_cast<std::size_t>(i)];
        out.v[static_cast<std::size_t>(i)] = x > T(0) ? x : T(0);
    }
}

template <typename T>
void relu_backward(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& din) {
    const std::int64_t n = in.numel();
    for (std::int64_t i = 0; i < n; ++i)
        din.v[static_cast<std::size_t>(i)] =
            in.v[static_cast<std::size_t>(i)] > T(0) ? dout.v[static_cast<std::size_t>(i)] : T(0);
}

template <typename T>
void scale_masked(const Tensor<T>& in, const std::vector<std::uint8_t>& mask, T scale,
                  Tensor<T>& out) {
    const std::int64_t n = in.numel();
    for (std::int64_t i = 0; i < n; ++i)
        out.v[static_cast<std::size_t>(i)] =
            mask[static_cast<std::size_t>(i)] ? in.v[static_cast<std::size_t>(i)] * scale : T(0);
}

}  // namespace serial

namespace par {

template <typename T>
void conv2d_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& out) {
    const std::int64_t N = in.shape[0], H = in.shape[1];
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t y = 0; y < H; ++y) detail::conv_forward_row(in, w, b, out, n, y);
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& dout, const Tensor<T>& w, Tensor<T>& din) {
    const std::int64_t N = din.shape[0], H = din.shape[1];
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t iy = 0; iy < H; ++iy) detail::conv_backward_input_row(dout, w, din, n, iy);
}

template <typename T>
void conv2d_backward_params(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& dw,
                            Tensor<T>& db) {
    const std::int64_t KH = dw.shape[0], KW = dw.shape[1], Ci = dw.shape[2];
#pragma omp parallel for collapse(3) schedule(static)
    for (std::int64_t ky = 0; ky < KH; ++ky)
        for (std::int64_t kx = 0; kx < KW; ++kx)
            for (std::int64_t ci = 0; ci < Ci; ++ci)
                detail::conv_backward_weight_slice(in, dout, dw, ky, kx, ci);
    const std::int64_t Co = db.shape[0];
#pragma omp parallel for schedule(static)
    for (std::int64_t co = 0; co < Co; ++co) detail::conv_backward_bias_one(dout, db, co);
}

template <typename T>
void dense_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& out) {
    const std::int64_t N = in.shape[0];
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < N; ++n) detail::dense_forward_row(in, w, b, out, n);
}

template <typename T>
void dense_backward_input(const Tensor<T>& dout, const Tensor<T>& w, Tensor<T>& din) {
    const std::int64_t N = din.shape[0];
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < N; ++n) detail::dense_backward_input_row(dout, w, din, n);
}

template <typename T>
void dense_backward_params(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& dw,
                           Tensor<T>& db) {
    const std::int64_t I = dw.shape[0];
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < I; ++i) detail::dense_backward_weight_row(in, dout, dw, i);
    const std::int64_t O = db.shape[0];
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < O; ++o) detail::dense_backward_bias_one(dout, db, o);
}

template <typename T>
void maxpool2d_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<std::int64_t>& argmax) {
    const std::int64_t N = out.shape[0], OH = out.shape[1];
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < OH; ++oy) detail::maxpool_forward_row(in, out, argmax, n, oy);
}

template <typename T>
void relu_forward(const Tensor<T>& in, Tensor<T>& out) {
    const std::int64_t n = in.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const T x = in.v[static_cast<std::size_t>(i)];
        out.v[static_cast<std::size_t>(i)] = x > T(0) ? x : T(0);
    }
}

template <typename T>
void relu_backward(const Tensor<T>& in, const Tensor<T>& dout, Tensor<T>& din) {
    const std::int64_t n = in.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        din.v[static_cast<std::size_t>(i)] =
            in.v[static_cast<std::size_t>(i)] > T(0) ? dout.v[static_cast<std::size_t>(i)] : T(0);
}

template <typename T>
void scale_masked(const Tensor<T>& in, const std::vector<std::uint8_t>& mask, T scale,
                  Tensor<T>& out) {
    const std::int64_t n = in.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        out.v[static_cast<std::size_t>(i)] =
            mask[static_cast<std::size_t>(i)] ? in.v[static_cast<std::size_t>(i)] * scale : T(0);
}

}  // namespace par

// maxpool windows are disjoint (stride == pool size), so no write collisions
template <typename T>
void maxpool2d_backward(const Tensor<T>& dout, const std::vector<std::int64_t>& argmax,
                        Tensor<T>& din) {
    din.fill(T(0));
    const std::int64_t n = dout.numel();
    for (std::int64_t i = 0; i < n; ++i)
        din.v[static_cast<std::size_t>(argmax[static_cast<std::size_t>(i)])] =
            dout.v[static_cast<std::size_t>(i)];
}

// row-wise, max-subtracted for stability; exact 1/K on constant rows
template <typename T>
void softmax_rows(const Tensor<T>& in, Tensor<T>& out) {
    const std::int64_t N = in.shape[0], K = in.shape[1];
    for (std::int64_t n = 0; n < N; ++n) {
        const T* irow = &in.v[static_cast<std::size_t>(n * K)];
        T* orow = &out.v[static_cast<std::size_t>(n * K)];
        T mx = irow[0];
        for (std::int64_t k = 1; k < K; ++k) mx = irow[k] > mx ? irow[k] : mx;
        T sum = T(0);
        for (std::int64_t k = 0; k < K; ++k) {
            orow[k] = std::exp(irow[k] - mx);
            sum += orow[k];
        }
        for (std::int64_t k = 0; k < K; ++k) orow[k] /= sum;
    }
}

// dIn = p .* (dOut - sum(dOut .* p)) per row
template <typename T>
void softmax_backward(const Tensor<T>& probs, const Tensor<T>& dout, Tensor<T>& din) {
    const std::int64_t N = probs.shape[0], K = probs.shape[1];
    for (std::int64_t n = 0; n < N; ++n) {
        const T* p = &probs.v[static_cast<std::size_t>(n * K)];
        const T* g = &dout.v[static_cast<std::size_t>(n * K)];
        T* d = &din.v[static_cast<std::size_t>(n * K)];
        T dot = T(0);
        for (std::int64_t k = 0; k < K; ++k) dot += g[k] * p[k];
        for (std::int64_t k = 0; k < K; ++k) d[k] = p[k] * (g[k] - dot);
    }
}

}  // namespace vsem::kernels
