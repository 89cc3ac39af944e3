#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vsem/common.hpp"
#include "vsem/kernels.hpp"
#include "vsem/tensor.hpp"

namespace vsem::net {

// 3x3, stride 1, same padding
struct Conv2DSpec {
    std::int64_t filters;
};
struct ReLUSpec {};
// 2x2, stride 2
struct MaxPoolSpec {};
struct DropoutSpec {
    double rate;
};
struct FlattenSpec {};
struct DenseSpec {
    std::int64_t units;
};
struct SoftmaxSpec {};
struct LinearSpec {};

using LayerSpec = std::variant<Conv2DSpec, ReLUSpec, MaxPoolSpec, DropoutSpec, FlattenSpec,
                               DenseSpec, SoftmaxSpec, LinearSpec>;

std::string layer_kind_name(const LayerSpec& layer);

enum class Head { Vector, Flat };

// activation shape between layers: either spatial (h,w,c) or flat (f)
struct ActShape {
    bool spatial = true;
    std::int64_t h = 0, w = 0, c = 0;
    std::int64_t f = 0;
    std::int64_t numel() const { return spatial ? h * w * c : f; }
};

struct NetworkSpec {
    std::int64_t height = 64, width = 64, channels = 3;
    std::vector<LayerSpec> layers;  // the full stack, final Dense+activation included
    Head head = Head::Vector;
    std::int64_t head_dim = 50;

    // Shape inference through every layer; index 0 is the input shape.
    // Throws ValidationError naming the offending layer.
    std::vector<ActShape> infer_shapes() const;
    void validate() const;  // infer_shapes plus head/ranges checks
};

// The architecture used throughout: three blocks of two 3x3 convolutions
// (ReLU) followed by 2x2 max pooling and dropout, two ReLU dense layers with
// dropout, and a Dense head with linear (vector regression) or softmax (flat
// classification) activation.
NetworkSpec stacked_conv_network(std::int64_t height, std::int64_t width, std::int64_t channels,
                                 Head head, std::int64_t head_dim,
                                 const std::vector<std::int64_t>& conv_filters = {32, 64, 64},
                                 std::int64_t dense_units = 256, double conv_dropout = 0.25,
                                 double dense_dropout = 0.5);

enum class LossKind { MeanAbsoluteError, WeightedCrossEntropy };

template <typename T>
struct TargetBatch {
    Tensor<T> vectors;                  // (N, head_dim) for MeanAbsoluteError
    std::vector<std::int64_t> classes;  // (N) for WeightedCrossEntropy
    std::vector<T> weights;             // per-sample; empty means all 1
};

template <typename T>
struct TrainState {
    NetworkSpec spec;
    std::vector<ActShape> shapes;  // shapes[i] = input shape of layer i
    struct Param {
        Tensor<T> w, b;    // weights and biases
        Tensor<T> aw, ab;  // RMSprop accumulators
    };
    std::vector<Param> params;
    std::vector<std::int64_t> param_index;  // per layer, -1 if non-parametric
    Rng dropout_rng{0};
    std::int64_t step = 0;
    kernels::Backend backend = kernels::Backend::Parallel;
};

// He-uniform weights (bound sqrt(6/fan_in)), zero biases; deterministic given seed.
template <typename T>
TrainState<T> build_network(const NetworkSpec& spec, std::uint64_t seed);

template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> acts;                        // acts[0]=input, acts[i+1]=layer i output
    std::vector<std::vector<std::int64_t>> pool_argmax;  // per layer
    std::vector<std::vector<std::uint8_t>> drop_mask;    // per layer
};

template <typename T>
Tensor<T> forward(TrainState<T>& state, const Tensor<T>& batch, bool training);

template <typename T>
ForwardCache<T> forward_cached(TrainState<T>& state, const Tensor<T>& batch, bool training);

template <typename T>
struct Gradients {
    T loss = T(0);
    std::vector<Tensor<T>> dw, db;  // parallel to state.params
};

template <typename T>
Gradients<T> compute_gradients(TrainState<T>& state, const Tensor<T>& batch,
                               const TargetBatch<T>& targets, LossKind loss, bool training);

template <typename T>
T compute_loss(TrainState<T>& state, const Tensor<T>& batch, const TargetBatch<T>& targets,
               LossKind loss, bool training);

// One RMSprop step: a <- rho a + (1-rho) g^2, w <- w - lr g/(sqrt(a)+eps).
// Returns the pre-update loss. Throws NumericError (naming the layer) on a
// non-finite loss or gradient.
template <typename T>
T train_step(TrainState<T>& state, const Tensor<T>& batch, const TargetBatch<T>& targets,
             LossKind loss, T lr, T rho, T eps);

// weights-only snapshot for early stopping restore
template <typename T>
struct WeightSnapshot {
    std::vector<Tensor<T>> w, b;
    std::int64_t step = 0;
};

template <typename T>
WeightSnapshot<T> snapshot_weights(const TrainState<T>& state);
template <typename T>
void restore_weights(TrainState<T>& state, const WeightSnapshot<T>& snap);

struct GradCheckLayer {
    std::string layer;
    double max_rel_err;
};

struct GradCheckReport {
    std::vector<GradCheckLayer> layers;
    double max_rel_err = 0;
    double tolerance = 0;
    bool pass = false;
};

// Central differences (step 1e-5) against the analytic gradients in double
// precision, dropout disabled. Failures land in the report, not exceptions.
GradCheckReport gradient_check(const NetworkSpec& spec, LossKind loss, double tolerance,
                               std::uint64_t seed = 7);

// Binary checkpoint: magic VFNN1, spec, step counter, little-endian float32
// tensors in layer order; plus a <path>.json sidecar with shapes and step.
void save_checkpoint(const TrainState<float>& state, const std::string& path);
TrainState<float> load_checkpoint(const std::string& path);

}  // namespace vsem::net

#include "vsem/network_impl.hpp"
