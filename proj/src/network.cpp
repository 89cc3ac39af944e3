#include "vsem/network.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace vsem::net {

std::string layer_kind_name(const LayerSpec& layer) {
    if (std::holds_alternative<Conv2DSpec>(layer)) return "conv2d";
    if (std::holds_alternative<ReLUSpec>(layer)) return "relu";
    if (std::holds_alternative<MaxPoolSpec>(layer)) return "maxpool";
    if (std::holds_alternative<DropoutSpec>(layer)) return "dropout";
    if (std::holds_alternative<FlattenSpec>(layer)) return "flatten";
    if (std::holds_alternative<DenseSpec>(layer)) return "dense";
    if (std::holds_alternative<SoftmaxSpec>(layer)) return "softmax";
    return "linear";
}

std::vector<ActShape> NetworkSpec::infer_shapes() const {
    auto fail = [&](std::size_t i, const std::string& msg) {
        throw ValidationError("layer " + std::to_string(i) + " (" +
                              layer_kind_name(layers[i]) + "): " + msg);
    };
    if (height < 1 || width < 1 || channels < 1)
        throw ValidationError("network: input extents must be positive");
    std::vector<ActShape> shapes;
    shapes.push_back({true, height, width, channels, 0});
    for (std::size_t i = 0; i < layers.size(); ++i) {
        ActShape in = shapes.back();
        ActShape out = in;
        if (const auto* conv = std::get_if<Conv2DSpec>(&layers[i])) {
            if (!in.spatial) fail(i, "requires a spatial input");
            if (conv->filters < 1) fail(i, "filters must be >= 1");
            out.c = conv->filters;
        } else if (std::holds_alternative<MaxPoolSpec>(layers[i])) {
            if (!in.spatial) fail(i, "requires a spatial input");
            if (in.h < 2 || in.w < 2)
                fail(i, "input " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                            " too small for 2x2 pooling");
            out.h = in.h / 2;
            out.w = in.w / 2;
        } else if (const auto* drop = std::get_if<DropoutSpec>(&layers[i])) {
            if (drop->rate < 0 || drop->rate >= 1) fail(i, "rate must be in [0,1)");
        } else if (std::holds_alternative<FlattenSpec>(layers[i])) {
            if (!in.spatial) fail(i, "input is already flat");
            out.spatial = false;
            out.f = in.h * in.w * in.c;
        } else if (const auto* dense = std::get_if<DenseSpec>(&layers[i])) {
            if (in.spatial) fail(i, "requires a flat input (missing flatten?)");
            if (dense->units < 1) fail(i, "units must be >= 1");
            out.f = dense->units;
        } else if (std::holds_alternative<SoftmaxSpec>(layers[i])) {
            if (in.spatial) fail(i, "requires a flat input");
        }
        // relu/linear keep the shape
        shapes.push_back(out);
    }
    return shapes;
}

void NetworkSpec::validate() const {
    if (head_dim < 1) throw ValidationError("network: head_dim must be >= 1");
    if (layers.size() < 2) throw ValidationError("network: needs at least Dense + activation");
    const auto shapes = infer_shapes();
    const LayerSpec& last = layers.back();
    const LayerSpec& prev = layers[layers.size() - 2];
    const auto* dense = std::get_if<DenseSpec>(&prev);
    if (head == Head::Vector) {
        if (!dense || !std::holds_alternative<LinearSpec>(last) || dense->units != head_dim)
            throw ValidationError("network: vector head must end Dense(" +
                                  std::to_string(head_dim) + ") + linear");
    } else {
        if (!dense || !std::holds_alternative<SoftmaxSpec>(last) || dense->units != head_dim)
            throw ValidationError("network: flat head must end Dense(" +
                                  std::to_string(head_dim) + ") + softmax");
    }
    (void)shapes;
}

NetworkSpec stacked_conv_network(std::int64_t height, std::int64_t width, std::int64_t channels,
                                 Head head, std::int64_t head_dim,
                                 const std::vector<std::int64_t>& conv_filters,
                                 std::int64_t dense_units, double conv_dropout,
                                 double dense_dropout) {
    NetworkSpec spec;
    spec.height = height;
    spec.width = width;
    spec.channels = channels;
    spec.head = head;
    spec.head_dim = head_dim;
    for (std::int64_t f : conv_filters) {
        spec.layers.push_back(Conv2DSpec{f});
        spec.layers.push_back(ReLUSpec{});
        spec.layers.push_back(Conv2DSpec{f});
        spec.layers.push_back(ReLUSpec{});
        spec.layers.push_back(MaxPoolSpec{});
        spec.layers.push_back(DropoutSpec{conv_dropout});
    }
    spec.layers.push_back(FlattenSpec{});
    spec.layers.push_back(DenseSpec{dense_units});
    spec.layers.push_back(ReLUSpec{});
    spec.layers.push_back(DenseSpec{dense_units});
    spec.layers.push_back(ReLUSpec{});
    spec.layers.push_back(DropoutSpec{dense_dropout});
    spec.layers.push_back(DenseSpec{head_dim});
    if (head == Head::Vector)
        spec.layers.push_back(LinearSpec{});
    else
        spec.layers.push_back(SoftmaxSpec{});
    return spec;
}

GradCheckReport gradient_check(const NetworkSpec& spec, LossKind loss, double tolerance,
                               std::uint64_t seed) {
    TrainState<double> state = build_network<double>(spec, seed);
    state.backend = kernels::Backend::Serial;

    Rng rng(derive_seed(seed, 1));
    const std::int64_t N = 2;
    Tensor<double> batch({N, spec.height, spec.width, spec.channels});
    for (auto& x : batch.v) x = rng.uniform(-1.0, 1.0);

    TargetBatch<double> targets;
    if (loss == LossKind::MeanAbsoluteError) {
        targets.vectors = Tensor<double>({N, spec.head_dim});
        for (auto& x : targets.vectors.v) x = rng.uniform(-1.0, 1.0);
    } else {
        for (std::int64_t s = 0; s < N; ++s)
            targets.classes.push_back(
                static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spec.head_dim))));
    }

    // dropout stays disabled: every pass runs with training=false
    Gradients<double> analytic = compute_gradients(state, batch, targets, loss, false);

    const double h = 1e-5;
    GradCheckReport report;
    report.tolerance = tolerance;
    auto check_tensor = [&](Tensor<double>& w, const Tensor<double>& dw, double& layer_max) {
        for (std::size_t j = 0; j < w.v.size(); ++j) {
            const double orig = w.v[j];
            w.v[j] = orig + h;
            const double lp = compute_loss(state, batch, targets, loss, false);
            w.v[j] = orig - h;
            const double lm = compute_loss(state, batch, targets, loss, false);
            w.v[j] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double a = dw.v[j];
            const double rel = std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-12);
            layer_max = std::max(layer_max, rel);
        }
    };
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (state.param_index[i] < 0) continue;
        const std::size_t pi = static_cast<std::size_t>(state.param_index[i]);
        double layer_max = 0;
        check_tensor(state.params[pi].w, analytic.dw[pi], layer_max);
        check_tensor(state.params[pi].b, analytic.db[pi], layer_max);
        report.layers.push_back(
            {"layer" + std::to_string(i) + ":" + layer_kind_name(spec.layers[i]), layer_max});
        report.max_rel_err = std::max(report.max_rel_err, layer_max);
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

namespace {

constexpr char kMagic[5] = {'V', 'F', 'N', 'N', '1'};

enum : std::uint8_t {
    kTagConv = 0,
    kTagReLU = 1,
    kTagMaxPool = 2,
    kTagDropout = 3,
    kTagFlatten = 4,
    kTagDense = 5,
    kTagSoftmax = 6,
    kTagLinear = 7,
};

template <typename T>
void write_pod(std::ofstream& out, const T& x) {
    out.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T x{};
    if (!in.read(reinterpret_cast<char*>(&x), sizeof(T)))
        throw FormatError(path + ": truncated checkpoint");
    return x;
}

}  // namespace

void save_checkpoint(const TrainState<float>& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    const auto& spec = state.spec;
    write_pod(out, static_cast<std::uint32_t>(spec.height));
    write_pod(out, static_cast<std::uint32_t>(spec.width));
    write_pod(out, static_cast<std::uint32_t>(spec.channels));
    write_pod(out, static_cast<std::uint8_t>(spec.head == Head::Vector ? 0 : 1));
    write_pod(out, static_cast<std::uint32_t>(spec.head_dim));
    write_pod(out, static_cast<std::uint32_t>(spec.layers.size()));
    for (const auto& layer : spec.layers) {
        if (const auto* conv = std::get_if<Conv2DSpec>(&layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagConv));
            write_pod(out, static_cast<std::uint32_t>(conv->filters));
        } else if (std::holds_alternative<ReLUSpec>(layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagReLU));
        } else if (std::holds_alternative<MaxPoolSpec>(layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagMaxPool));
        } else if (const auto* drop = std::get_if<DropoutSpec>(&layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagDropout));
            write_pod(out, drop->rate);
        } else if (std::holds_alternative<FlattenSpec>(layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagFlatten));
        } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagDense));
            write_pod(out, static_cast<std::uint32_t>(dense->units));
        } else if (std::holds_alternative<SoftmaxSpec>(layer)) {
            write_pod(out, static_cast<std::uint8_t>(kTagSoftmax));
        } else {
            write_pod(out, static_cast<std::uint8_t>(kTagLinear));
        }
    }
    write_pod(out, static_cast<std::uint64_t>(state.step));
    for (const auto& p : state.params) {
        out.write(reinterpret_cast<const char*>(p.w.data()),
                  static_cast<std::streamsize>(p.w.v.size() * sizeof(float)));
        out.write(reinterpret_cast<const char*>(p.b.data()),
                  static_cast<std::streamsize>(p.b.v.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
    out.close();

    nlohmann::json manifest;
    manifest["magic"] = "VFNN1";
    manifest["step"] = state.step;
    auto tensors = nlohmann::json::array();
    for (std::size_t i = 0; i < state.spec.layers.size(); ++i) {
        if (state.param_index[i] < 0) continue;
        const auto& p = state.params[static_cast<std::size_t>(state.param_index[i])];
        nlohmann::json t;
        t["layer"] = i;
        t["kind"] = layer_kind_name(state.spec.layers[i]);
        t["w"] = p.w.shape;
        t["b"] = p.b.shape;
        tensors.push_back(t);
    }
    manifest["tensors"] = tensors;
    std::ofstream jout(path + ".json");
    if (!jout) throw IoError("cannot write checkpoint manifest: " + path + ".json");
    jout << manifest.dump(2) << "\n";
}

TrainState<float> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[5];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw FormatError(path + ": bad checkpoint magic");
    NetworkSpec spec;
    spec.height = read_pod<std::uint32_t>(in, path);
    spec.width = read_pod<std::uint32_t>(in, path);
    spec.channels = read_pod<std::uint32_t>(in, path);
    spec.head = read_pod<std::uint8_t>(in, path) == 0 ? Head::Vector : Head::Flat;
    spec.head_dim = read_pod<std::uint32_t>(in, path);
    const std::uint32_t n_layers = read_pod<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint8_t tag = read_pod<std::uint8_t>(in, path);
        switch (tag) {
            case kTagConv:
                spec.layers.push_back(
                    Conv2DSpec{static_cast<std::int64_t>(read_pod<std::uint32_t>(in, path))});
                break;
            case kTagReLU: spec.layers.push_back(ReLUSpec{}); break;
            case kTagMaxPool: spec.layers.push_back(MaxPoolSpec{}); break;
            case kTagDropout: spec.layers.push_back(DropoutSpec{read_pod<double>(in, path)}); break;
            case kTagFlatten: spec.layers.push_back(FlattenSpec{}); break;
            case kTagDense:
                spec.layers.push_back(
                    DenseSpec{static_cast<std::int64_t>(read_pod<std::uint32_t>(in, path))});
                break;
            case kTagSoftmax: spec.layers.push_back(SoftmaxSpec{}); break;
            case kTagLinear: spec.layers.push_back(LinearSpec{}); break;
            default: throw FormatError(path + ": unknown layer tag " + std::to_string(tag));
        }
    }
    TrainState<float> state = build_network<float>(spec, 0);
    state.step = static_cast<std::int64_t>(read_pod<std::uint64_t>(in, path));
    for (auto& p : state.params) {
        if (!in.read(reinterpret_cast<char*>(p.w.data()),
                     static_cast<std::streamsize>(p.w.v.size() * sizeof(float))))
            throw FormatError(path + ": truncated weight tensor");
        if (!in.read(reinterpret_cast<char*>(p.b.data()),
                     static_cast<std::streamsize>(p.b.v.size() * sizeof(float))))
            throw FormatError(path + ": truncated bias tensor");
        if (!p.w.all_finite() || !p.b.all_finite())
            throw FormatError(path + ": non-finite value in checkpoint tensor");
        p.aw.fill(0);
        p.ab.fill(0);
    }
    char extra;
    if (in.read(&extra, 1)) throw FormatError(path + ": trailing bytes after tensors");
    return state;
}

}  // namespace vsem::net
