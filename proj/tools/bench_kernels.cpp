// Times the serial reference kernels against the OpenMP versions on
// training-sized workloads and reports the speedup. The two backends are
// bit-identical by construction; this only measures wall time.

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vsem/common.hpp"
#include "vsem/kernels.hpp"

using namespace vsem;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

TensorF random_tensor(std::vector<std::int64_t> shape, Rng& rng) {
    TensorF t(std::move(shape));
    for (auto& x : t.v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void report(const char* name, double serial_ms, double par_ms) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, par_ms,
                serial_ms / par_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled\n");
#endif
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    Rng rng(7);
    const std::int64_t N = 16, H = 32, W = 32, Ci = 32, Co = 32;
    TensorF in = random_tensor({N, H, W, Ci}, rng);
    TensorF w = random_tensor({3, 3, Ci, Co}, rng);
    TensorF b = random_tensor({Co}, rng);
    TensorF out({N, H, W, Co});
    TensorF dout = random_tensor({N, H, W, Co}, rng);
    TensorF din({N, H, W, Ci});
    TensorF dw({3, 3, Ci, Co});
    TensorF db({Co});

    report("conv2d_forward",
           time_ms([&] { kernels::serial::conv2d_forward(in, w, b, out); }, 5),
           time_ms([&] { kernels::par::conv2d_forward(in, w, b, out); }, 5));
    report("conv2d_backward_input",
           time_ms([&] { kernels::serial::conv2d_backward_input(dout, w, din); }, 5),
           time_ms([&] { kernels::par::conv2d_backward_input(dout, w, din); }, 5));
    report("conv2d_backward_params",
           time_ms([&] { kernels::serial::conv2d_backward_params(in, dout, dw, db); }, 5),
           time_ms([&] { kernels::par::conv2d_backward_params(in, dout, dw, db); }, 5));

    const std::int64_t I = 4096, O = 256;
    TensorF din2({N, I});
    TensorF dense_in = random_tensor({N, I}, rng);
    TensorF dense_w = random_tensor({I, O}, rng);
    TensorF dense_b = random_tensor({O}, rng);
    TensorF dense_out({N, O});
    TensorF dense_dout = random_tensor({N, O}, rng);
    TensorF dense_dw({I, O});
    TensorF dense_db({O});

    report("dense_forward",
           time_ms([&] { kernels::serial::dense_forward(dense_in, dense_w, dense_b, dense_out); }, 20),
           time_ms([&] { kernels::par::dense_forward(dense_in, dense_w, dense_b, dense_out); }, 20));
    report("dense_backward_input",
           time_ms([&] { kernels::serial::dense_backward_input(dense_dout, dense_w, din2); }, 20),
           time_ms([&] { kernels::par::dense_backward_input(dense_dout, dense_w, din2); }, 20));
    report("dense_backward_params",
           time_ms([&] { kernels::serial::dense_backward_params(dense_in, dense_dout, dense_dw, dense_db); }, 20),
           time_ms([&] { kernels::par::dense_backward_params(dense_in, dense_dout, dense_dw, dense_db); }, 20));

    TensorF pooled({N, H / 2, W / 2, Ci});
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(pooled.numel()));
    report("maxpool2d_forward",
           time_ms([&] { kernels::serial::maxpool2d_forward(in, pooled, argmax); }, 50),
           time_ms([&] { kernels::par::maxpool2d_forward(in, pooled, argmax); }, 50));
    TensorF relu_out({N, H, W, Ci});
    report("relu_forward",
           time_ms([&] { kernels::serial::relu_forward(in, relu_out); }, 50),
           time_ms([&] { kernels::par::relu_forward(in, relu_out); }, 50));
    return 0;
}
