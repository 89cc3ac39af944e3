#pragma once

// template implementations for network.hpp; not meant for direct inclusion

#include <algorithm>

namespace vsem::net {

namespace detail {

inline std::string shape4_str(const std::vector<std::int64_t>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

template <typename T>
Tensor<T> make_act(const ActShape& s, std::int64_t n) {
    if (s.spatial) return Tensor<T>({n, s.h, s.w, s.c});
    return Tensor<T>({n, s.f});
}

}  // namespace detail

template <typename T>
TrainState<T> build_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    TrainState<T> state;
    state.spec = spec;
    state.shapes = spec.infer_shapes();
    state.param_index.assign(spec.layers.size(), -1);
    state.dropout_rng = Rng(derive_seed(seed, 99));
    Rng init(derive_seed(seed, 7));

    auto he_fill = [&](Tensor<T>& w, std::int64_t fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& x : w.v) x = static_cast<T>(init.uniform(-bound, bound));
    };

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const ActShape& in = state.shapes[i];
        if (const auto* conv = std::get_if<Conv2DSpec>(&spec.layers[i])) {
            typename TrainState<T>::Param p;
            p.w = Tensor<T>({3, 3, in.c, conv->filters});
            p.b = Tensor<T>({conv->filters});
            he_fill(p.w, 3 * 3 * in.c);
            p.aw = Tensor<T>(p.w.shape);
            p.ab = Tensor<T>(p.b.shape);
            state.param_index[i] = static_cast<std::int64_t>(state.params.size());
            state.params.push_back(std::move(p));
        } else if (const auto* dense = std::get_if<DenseSpec>(&spec.layers[i])) {
            typename TrainState<T>::Param p;
            p.w = Tensor<T>({in.f, dense->units});
            p.b = Tensor<T>({dense->units});
            he_fill(p.w, in.f);
            p.aw = Tensor<T>(p.w.shape);
            p.ab = Tensor<T>(p.b.shape);
            state.param_index[i] = static_cast<std::int64_t>(state.params.size());
            state.params.push_back(std::move(p));
        }
    }
    return state;
}

template <typename T>
ForwardCache<T> forward_cached(TrainState<T>& state, const Tensor<T>& batch, bool training) {
    const auto& spec = state.spec;
    if (batch.shape.size() != 4 || batch.shape[1] != spec.height || batch.shape[2] != spec.width ||
        batch.shape[3] != spec.channels)
        throw ValidationError(
            "forward: input shape mismatch: expected (N," + std::to_string(spec.height) + "," +
            std::to_string(spec.width) + "," + std::to_string(spec.channels) + "), got " +
            detail::shape4_str(batch.shape));
    const std::int64_t N = batch.shape[0];
    const bool par = state.backend == kernels::Backend::Parallel;

    ForwardCache<T> cache;
    cache.acts.reserve(spec.layers.size() + 1);
    cache.acts.push_back(batch);
    cache.pool_argmax.resize(spec.layers.size());
    cache.drop_mask.resize(spec.layers.size());

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const Tensor<T>& in = cache.acts[i];
        Tensor<T> out = detail::make_act<T>(state.shapes[i + 1], N);
        if (const auto* conv = std::get_if<Conv2DSpec>(&spec.layers[i])) {
            (void)conv;
            const auto& p = state.params[static_cast<std::size_t>(state.param_index[i])];
            if (par)
                kernels::par::conv2d_forward(in, p.w, p.b, out);
            else
                kernels::serial::conv2d_forward(in, p.w, p.b, out);
        } else if (std::holds_alternative<ReLUSpec>(spec.layers[i])) {
            if (par)
                kernels::par::relu_forward(in, out);
            else
                kernels::serial::relu_forward(in, out);
        } else if (std::holds_alternative<MaxPoolSpec>(spec.layers[i])) {
            auto& argmax = cache.pool_argmax[i];
            argmax.resize(static_cast<std::size_t>(out.numel()));
            if (par)
                kernels::par::maxpool2d_forward(in, out, argmax);
            else
                kernels::serial::maxpool2d_forward(in, out, argmax);
        } else if (const auto* drop = std::get_if<DropoutSpec>(&spec.layers[i])) {
            if (training && drop->rate > 0) {
                auto& mask = cache.drop_mask[i];
                mask.resize(static_cast<std::size_t>(in.numel()));
                // mask drawn serially so results do not depend on thread count
                for (auto& m : mask) m = state.dropout_rng.uniform() >= drop->rate ? 1 : 0;
                const T scale = static_cast<T>(1.0 / (1.0 - drop->rate));
                if (par)
                    kernels::par::scale_masked(in, mask, scale, out);
                else
                    kernels::serial::scale_masked(in, mask, scale, out);
            } else {
                out.v = in.v;
            }
        } else if (std::holds_alternative<FlattenSpec>(spec.layers[i])) {
            out.v = in.v;
        } else if (std::holds_alternative<DenseSpec>(spec.layers[i])) {
            const auto& p = state.params[static_cast<std::size_t>(state.param_index[i])];
            if (par)
                kernels::par::dense_forward(in, p.w, p.b, out);
            else
                kernels::serial::dense_forward(in, p.w, p.b, out);
        } else if (std::holds_alternative<SoftmaxSpec>(spec.layers[i])) {
            kernels::softmax_rows(in, out);
        } else {  // Linear
            out.v = in.v;
        }
        cache.acts.push_back(std::move(out));
    }
    return cache;
}

template <typename T>
Tensor<T> forward(TrainState<T>& state, const Tensor<T>& batch, bool training) {
    ForwardCache<T> cache = forward_cached(state, batch, training);
    return std::move(cache.acts.back());
}

namespace detail {

template <typename T>
T sample_weight(const TargetBatch<T>& targets, std::int64_t s) {
    return targets.weights.empty() ? T(1) : targets.weights[static_cast<std::size_t>(s)];
}

// loss and gradient at the network output. For cross-entropy the gradient is
// with respect to the softmax *logits* (fused), so backward skips the final
// softmax layer.
template <typename T>
T loss_and_output_grad(const Tensor<T>& out, const TargetBatch<T>& targets, LossKind loss,
                       Tensor<T>* grad) {
    const std::int64_t N = out.shape[0];
    const std::int64_t D = out.shape[1];
    double total = 0;
    if (grad) *grad = Tensor<T>(out.shape);
    if (loss == LossKind::MeanAbsoluteError) {
        if (!out.same_shape(targets.vectors))
            throw ValidationError("train_step: target shape " +
                                  shape4_str(targets.vectors.shape) + " != output shape " +
                                  shape4_str(out.shape));
        for (std::int64_t s = 0; s < N; ++s) {
            const T w = sample_weight(targets, s);
            double acc = 0;
            for (std::int64_t d = 0; d < D; ++d) {
                const double diff = static_cast<double>(out.at2(s, d)) -
                                    static_cast<double>(targets.vectors.at2(s, d));
                acc += std::abs(diff);
                if (grad) {
                    const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
                    grad->at2(s, d) = static_cast<T>(static_cast<double>(w) * sign /
                                                     (static_cast<double>(N) * static_cast<double>(D)));
                }
            }
            total += static_cast<double>(w) * acc / static_cast<double>(D);
        }
    } else {
        if (static_cast<std::int64_t>(targets.classes.size()) != N)
            throw ValidationError("train_step: expected " + std::to_string(N) +
                                  " class targets, got " + std::to_string(targets.classes.size()));
        for (std::int64_t s = 0; s < N; ++s) {
            const std::int64_t gold = targets.classes[static_cast<std::size_t>(s)];
            if (gold < 0 || gold >= D)
                throw ValidationError("train_step: class index " + std::to_string(gold) +
                                      " out of range [0," + std::to_string(D) + ")");
            const T w = sample_weight(targets, s);
            const double p = std::max(static_cast<double>(out.at2(s, gold)), 1e-30);
            total += -static_cast<double>(w) * std::log(p);
            if (grad)
                for (std::int64_t d = 0; d < D; ++d) {
                    const double y = d == gold ? 1.0 : 0.0;
                    grad->at2(s, d) = static_cast<T>(
                        static_cast<double>(w) * (static_cast<double>(out.at2(s, d)) - y) /
                        static_cast<double>(N));
                }
        }
    }
    return static_cast<T>(total / static_cast<double>(N));
}

}  // namespace detail

template <typename T>
T compute_loss(TrainState<T>& state, const Tensor<T>& batch, const TargetBatch<T>& targets,
               LossKind loss, bool training) {
    if (loss == LossKind::WeightedCrossEntropy &&
        (state.spec.layers.empty() || !std::holds_alternative<SoftmaxSpec>(state.spec.layers.back())))
        throw ValidationError("weighted-cross-entropy requires a softmax head");
    Tensor<T> out = forward(state, batch, training);
    return detail::loss_and_output_grad<T>(out, targets, loss, nullptr);
}

template <typename T>
Gradients<T> compute_gradients(TrainState<T>& state, const Tensor<T>& batch,
                               const TargetBatch<T>& targets, LossKind loss, bool training) {
    const auto& spec = state.spec;
    const bool fused_ce = loss == LossKind::WeightedCrossEntropy;
    if (fused_ce &&
        (spec.layers.empty() || !std::holds_alternative<SoftmaxSpec>(spec.layers.back())))
        throw ValidationError("weighted-cross-entropy requires a softmax head");

    ForwardCache<T> cache = forward_cached(state, batch, training);
    const std::int64_t N = batch.shape[0];
    const bool par = state.backend == kernels::Backend::Parallel;

    Gradients<T> grads;
    grads.dw.resize(state.params.size());
    grads.db.resize(state.params.size());

    Tensor<T> g;
    grads.loss = detail::loss_and_output_grad<T>(cache.acts.back(), targets, loss, &g);
    if (!std::isfinite(static_cast<double>(grads.loss))) throw NumericError("non-finite loss");

    for (std::int64_t i = static_cast<std::int64_t>(spec.layers.size()) - 1; i >= 0; --i) {
        const std::size_t li = static_cast<std::size_t>(i);
        const Tensor<T>& in = cache.acts[li];
        Tensor<T> din;
        if (const auto* conv = std::get_if<Conv2DSpec>(&spec.layers[li])) {
            (void)conv;
            const std::size_t pi = static_cast<std::size_t>(state.param_index[li]);
            const auto& p = state.params[pi];
            grads.dw[pi] = Tensor<T>(p.w.shape);
            grads.db[pi] = Tensor<T>(p.b.shape);
            din = Tensor<T>(in.shape);
            if (par) {
                kernels::par::conv2d_backward_params(in, g, grads.dw[pi], grads.db[pi]);
                kernels::par::conv2d_backward_input(g, p.w, din);
            } else {
                kernels::serial::conv2d_backward_params(in, g, grads.dw[pi], grads.db[pi]);
                kernels::serial::conv2d_backward_input(g, p.w, din);
            }
            if (!grads.dw[pi].all_finite() || !grads.db[pi].all_finite())
                throw NumericError("non-finite gradient in layer " + std::to_string(i) +
                                   " (conv2d)");
        } else if (std::holds_alternative<DenseSpec>(spec.layers[li])) {
            const std::size_t pi = static_cast<std::size_t>(state.param_index[li]);
            const auto& p = state.params[pi];
            grads.dw[pi] = Tensor<T>(p.w.shape);
            grads.db[pi] = Tensor<T>(p.b.shape);
            din = Tensor<T>(in.shape);
            if (par) {
                kernels::par::dense_backward_params(in, g, grads.dw[pi], grads.db[pi]);
                kernels::par::dense_backward_input(g, p.w, din);
            } else {
                kernels::serial::dense_backward_params(in, g, grads.dw[pi], grads.db[pi]);
                kernels::serial::dense_backward_input(g, p.w, din);
            }
            if (!grads.dw[pi].all_finite() || !grads.db[pi].all_finite())
                throw NumericError("non-finite gradient in layer " + std::to_string(i) +
                                   " (dense)");
        } else if (std::holds_alternative<ReLUSpec>(spec.layers[li])) {
            din = Tensor<T>(in.shape);
            if (par)
                kernels::par::relu_backward(in, g, din);
            else
                kernels::serial::relu_backward(in, g, din);
        } else if (std::holds_alternative<MaxPoolSpec>(spec.layers[li])) {
            din = Tensor<T>(in.shape);
            kernels::maxpool2d_backward(g, cache.pool_argmax[li], din);
        } else if (const auto* drop = std::get_if<DropoutSpec>(&spec.layers[li])) {
            if (!cache.drop_mask[li].empty()) {
                din = Tensor<T>(in.shape);
                const T scale = static_cast<T>(1.0 / (1.0 - drop->rate));
                if (par)
                    kernels::par::scale_masked(g, cache.drop_mask[li], scale, din);
                else
                    kernels::serial::scale_masked(g, cache.drop_mask[li], scale, din);
            } else {
                din = std::move(g);
            }
        } else if (std::holds_alternative<FlattenSpec>(spec.layers[li])) {
            din = Tensor<T>(detail::make_act<T>(state.shapes[li], N).shape, std::move(g.v));
        } else if (std::holds_alternative<SoftmaxSpec>(spec.layers[li])) {
            if (fused_ce && li == spec.layers.size() - 1) {
                din = std::move(g);  // gradient already w.r.t. the logits
            } else {
                din = Tensor<T>(in.shape);
                kernels::softmax_backward(cache.acts[li + 1], g, din);
            }
        } else {  // Linear
            din = std::move(g);
        }
        g = std::move(din);
    }
    return grads;
}

template <typename T>
T train_step(TrainState<T>& state, const Tensor<T>& batch, const TargetBatch<T>& targets,
             LossKind loss, T lr, T rho, T eps) {
    Gradients<T> grads = compute_gradients(state, batch, targets, loss, /*training=*/true);
    for (std::size_t pi = 0; pi < state.params.size(); ++pi) {
        auto& p = state.params[pi];
        auto rms = [&](Tensor<T>& w, Tensor<T>& a, const Tensor<T>& gt) {
            const std::size_t n = w.v.size();
            for (std::size_t j = 0; j < n; ++j) {
                const T gj = gt.v[j];
                a.v[j] = rho * a.v[j] + (T(1) - rho) * gj * gj;
                w.v[j] -= lr * gj / (std::sqrt(a.v[j]) + eps);
            }
        };
        rms(p.w, p.aw, grads.dw[pi]);
        rms(p.b, p.ab, grads.db[pi]);
    }
    ++state.step;
    return grads.loss;
}

template <typename T>
WeightSnapshot<T> snapshot_weights(const TrainState<T>& state) {
    WeightSnapshot<T> snap;
    snap.step = state.step;
    for (const auto& p : state.params) {
        snap.w.push_back(p.w);
        snap.b.push_back(p.b);
    }
    return snap;
}

template <typename T>
void restore_weights(TrainState<T>& state, const WeightSnapshot<T>& snap) {
    if (snap.w.size() != state.params.size())
        throw ValidationError("restore_weights: snapshot does not match network");
    for (std::size_t i = 0; i < state.params.size(); ++i) {
        state.params[i].w = snap.w[i];
        state.params[i].b = snap.b[i];
    }
    state.step = snap.step;
}

}  // namespace vsem::net
