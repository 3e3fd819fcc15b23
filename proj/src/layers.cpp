#include "aee/layers.hpp"

#include <algorithm>
#include <cmath>

#include "aee/errors.hpp"

namespace aee {

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::maxpool1d: return "maxpool1d";
        case LayerKind::upsample1d: return "upsample1d";
        case LayerKind::dense: return "dense";
        case LayerKind::activation: return "activation";
        case LayerKind::dropout: return "dropout";
        case LayerKind::flatten: return "flatten";
        case LayerKind::reshape: return "reshape";
    }
    return "?";
}

const char* to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::relu: return "relu";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::sigmoid: return "sigmoid";
        case ActivationKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
    for (auto k : {LayerKind::conv1d, LayerKind::maxpool1d, LayerKind::upsample1d,
                   LayerKind::dense, LayerKind::activation, LayerKind::dropout,
                   LayerKind::flatten, LayerKind::reshape}) {
        if (name == to_string(k)) return k;
    }
    throw ParseError("unknown layer kind '" + name + "'");
}

ActivationKind parse_activation(const std::string& name) {
    for (auto a : {ActivationKind::relu, ActivationKind::tanh, ActivationKind::sigmoid,
                   ActivationKind::softmax}) {
        if (name == to_string(a)) return a;
    }
    throw ParameterError("unknown activation '" + name + "'");
}

LayerSpec LayerSpec::conv(std::size_t filters, std::size_t kernel, Padding padding,
                          std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::conv1d;
    s.filters = filters;
    s.kernel_size = kernel;
    s.padding = padding;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::maxpool(std::size_t pool) {
    LayerSpec s;
    s.kind = LayerKind::maxpool1d;
    s.pool_size = pool;
    return s;
}

LayerSpec LayerSpec::upsample(std::size_t factor) {
    LayerSpec s;
    s.kind = LayerKind::upsample1d;
    s.pool_size = factor;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::act(ActivationKind a) {
    LayerSpec s;
    s.kind = LayerKind::activation;
    s.activation = a;
    return s;
}

LayerSpec LayerSpec::dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::dropout;
    s.dropout_rate = rate;
    return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::reshape(Shape target) {
    LayerSpec s;
    s.kind = LayerKind::reshape;
    s.target_shape = std::move(target);
    return s;
}

namespace {

void require_rank2(const Shape& shape, const char* what) {
    if (shape.size() != 2) {
        throw DimensionError(std::string(what) + " expects a [channels x length] input, got " +
                             shape_string(shape));
    }
}

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
}

}  // namespace

Layer make_layer(const LayerSpec& spec, const Shape& input_shape) {
    Layer layer;
    layer.spec = spec;
    layer.input_shape = input_shape;
    switch (spec.kind) {
        case LayerKind::conv1d: {
            require_rank2(input_shape, "conv1d");
            layer.geometry = conv1d_geometry(input_shape[0], input_shape[1], spec.filters,
                                             spec.kernel_size, spec.stride, spec.padding);
            layer.output_shape = {spec.filters, layer.geometry.out_length};
            layer.weights.assign(spec.filters * input_shape[0] * spec.kernel_size, 0.0);
            layer.bias.assign(spec.filters, 0.0);
            break;
        }
        case LayerKind::maxpool1d: {
            require_rank2(input_shape, "maxpool1d");
            if (spec.pool_size == 0 || input_shape[1] < spec.pool_size) {
                throw DimensionError("maxpool1d input length " + std::to_string(input_shape[1]) +
                                     " is shorter than the pool size");
            }
            layer.output_shape = {input_shape[0], input_shape[1] / spec.pool_size};
            break;
        }
        case LayerKind::upsample1d:
            require_rank2(input_shape, "upsample1d");
            if (spec.pool_size == 0) throw ParameterError("upsampling factor must be >= 1");
            layer.output_shape = {input_shape[0], input_shape[1] * spec.pool_size};
            break;
        case LayerKind::dense: {
            if (input_shape.size() != 1) {
                throw DimensionError("dense expects a flat input, got " +
                                     shape_string(input_shape));
            }
            if (spec.units == 0) throw ParameterError("dense layer needs at least one unit");
            layer.output_shape = {spec.units};
            layer.weights.assign(spec.units * input_shape[0], 0.0);
            layer.bias.assign(spec.units, 0.0);
            break;
        }
        case LayerKind::activation:
            layer.output_shape = input_shape;
            break;
        case LayerKind::dropout:
            check_rate(spec.dropout_rate);
            layer.output_shape = input_shape;
            break;
        case LayerKind::flatten:
            layer.output_shape = {shape_size(input_shape)};
            break;
        case LayerKind::reshape:
            if (shape_size(spec.target_shape) != shape_size(input_shape)) {
                throw DimensionError("cannot reshape " + shape_string(input_shape) + " to " +
                                     shape_string(spec.target_shape));
            }
            layer.output_shape = spec.target_shape;
            break;
    }
    return layer;
}

void init_params(Layer& layer, Rng& rng) {
    std::size_t fan_in = 0;
    if (layer.spec.kind == LayerKind::conv1d) {
        fan_in = layer.input_shape[0] * layer.spec.kernel_size;
    } else if (layer.spec.kind == LayerKind::dense) {
        fan_in = layer.input_shape[0];
    } else {
        return;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

Tensor conv1d_forward(const Tensor& input, const Tensor& weights, std::span<const double> bias,
                      std::size_t stride, Padding padding) {
    require_rank2(input.shape, "conv1d");
    if (weights.rank() != 3 || weights.shape[1] != input.shape[0]) {
        throw DimensionError("conv1d weights " + shape_string(weights.shape) +
                             " do not match input channels of " + shape_string(input.shape));
    }
    if (bias.size() != weights.shape[0]) throw DimensionError("conv1d bias size mismatch");
    const auto g = conv1d_geometry(input.shape[0], input.shape[1], weights.shape[0],
                                   weights.shape[2], stride, padding);
    Tensor out({g.out_channels, g.out_length});
    kernels::conv1d_forward(g, input.data, weights.data, bias, out.data);
    return out;
}

Conv1dGrads conv1d_backward(const Tensor& input, const Tensor& weights, std::size_t stride,
                            Padding padding, const Tensor& grad_output) {
    require_rank2(input.shape, "conv1d");
    if (weights.rank() != 3 || weights.shape[1] != input.shape[0]) {
        throw DimensionError("conv1d weights do not match input channels");
    }
    const auto g = conv1d_geometry(input.shape[0], input.shape[1], weights.shape[0],
                                   weights.shape[2], stride, padding);
    require_shape(grad_output, {g.out_channels, g.out_length}, "conv1d upstream gradient");
    Conv1dGrads grads{Tensor(input.shape), Tensor(weights.shape),
                      std::vector<double>(g.out_channels, 0.0)};
    kernels::conv1d_backward(g, input.data, weights.data, grad_output.data, grads.input.data,
                             grads.weights.data, grads.bias);
    return grads;
}

PoolResult maxpool1d_forward(const Tensor& input, std::size_t pool_size) {
    require_rank2(input.shape, "maxpool1d");
    const std::size_t channels = input.shape[0];
    const std::size_t len = input.shape[1];
    if (pool_size == 0 || len < pool_size) {
        throw DimensionError("maxpool1d input is shorter than the pool size");
    }
    const std::size_t out_len = len / pool_size;
    PoolResult r{Tensor({channels, out_len}), std::vector<std::size_t>(channels * out_len)};
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t o = 0; o < out_len; ++o) {
            std::size_t best = c * len + o * pool_size;
            for (std::size_t p = 1; p < pool_size; ++p) {
                const std::size_t idx = c * len + o * pool_size + p;
                if (input.data[idx] > input.data[best]) best = idx;
            }
            r.output.data[c * out_len + o] = input.data[best];
            r.argmax[c * out_len + o] = best;
        }
    }
    return r;
}

Tensor maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                          const Tensor& grad_output) {
    if (argmax.size() != grad_output.size()) {
        throw DimensionError("maxpool1d argmax does not match upstream gradient");
    }
    Tensor grad(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) grad.data.at(argmax[i]) += grad_output.data[i];
    return grad;
}

Tensor upsample1d_forward(const Tensor& input, std::size_t factor) {
    require_rank2(input.shape, "upsample1d");
    const std::size_t len = input.shape[1];
    Tensor out({input.shape[0], len * factor});
    for (std::size_t c = 0; c < input.shape[0]; ++c) {
        for (std::size_t i = 0; i < len * factor; ++i) out(c, i) = input(c, i / factor);
    }
    return out;
}

Tensor upsample1d_backward(const Tensor& grad_output, std::size_t factor) {
    require_rank2(grad_output.shape, "upsample1d");
    const std::size_t len = grad_output.shape[1] / factor;
    Tensor grad({grad_output.shape[0], len});
    for (std::size_t c = 0; c < grad_output.shape[0]; ++c) {
        for (std::size_t i = 0; i < len * factor; ++i) grad(c, i / factor) += grad_output(c, i);
    }
    return grad;
}

Tensor activation_forward(ActivationKind kind, const Tensor& input) {
    Tensor out(input.shape);
    auto& y = out.data;
    const auto& x = input.data;
    switch (kind) {
        case ActivationKind::relu:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        case ActivationKind::tanh:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
            break;
        case ActivationKind::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) {
                // Split on sign so exp never overflows.
                if (x[i] >= 0.0) {
                    y[i] = 1.0 / (1.0 + std::exp(-x[i]));
                } else {
                    const double e = std::exp(x[i]);
                    y[i] = e / (1.0 + e);
                }
            }
            break;
        case ActivationKind::softmax: {
            const std::size_t len = input.length();
            const std::size_t rows = len == 0 ? 0 : x.size() / len;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* xr = x.data() + r * len;
                double* yr = y.data() + r * len;
                const double m = *std::max_element(xr, xr + len);
                double sum = 0.0;
                for (std::size_t i = 0; i < len; ++i) sum += (yr[i] = std::exp(xr[i] - m));
                for (std::size_t i = 0; i < len; ++i) yr[i] /= sum;
            }
            break;
        }
    }
    return out;
}

Tensor activation_backward(ActivationKind kind, const Tensor& input, const Tensor& output,
                           const Tensor& grad_output) {
    require_shape(grad_output, output.shape, "activation upstream gradient");
    Tensor grad(input.shape);
    auto& g = grad.data;
    const auto& x = input.data;
    const auto& y = output.data;
    const auto& go = grad_output.data;
    switch (kind) {
        case ActivationKind::relu:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0 ? go[i] : 0.0;
            break;
        case ActivationKind::tanh:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = go[i] * (1.0 - y[i] * y[i]);
            break;
        case ActivationKind::sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = go[i] * y[i] * (1.0 - y[i]);
            break;
        case ActivationKind::softmax: {
            const std::size_t len = output.length();
            const std::size_t rows = len == 0 ? 0 : y.size() / len;
            for (std::size_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (std::size_t i = 0; i < len; ++i) dot += go[r * len + i] * y[r * len + i];
                for (std::size_t i = 0; i < len; ++i) {
                    g[r * len + i] = y[r * len + i] * (go[r * len + i] - dot);
                }
            }
            break;
        }
    }
    return grad;
}

Tensor dropout_forward(const Tensor& input, double rate, Mode mode, Rng* rng,
                       std::vector<double>* mask) {
    check_rate(rate);
    if (mode == Mode::inference || rate == 0.0) {
        if (mask) mask->assign(input.size(), 1.0);
        return input;
    }
    if (!rng) throw StateError("dropout in training mode needs a random generator");
    const double keep = 1.0 - rate;
    const double scale = 1.0 / keep;
    Tensor out(input.shape);
    std::vector<double> m(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        m[i] = rng->uniform() < keep ? scale : 0.0;
        out.data[i] = input.data[i] * m[i];
    }
    if (mask) *mask = std::move(m);
    return out;
}

Tensor layer_forward(const Layer& layer, const Tensor& input, Mode mode, Rng* rng,
                     TraceEntry* entry) {
    require_shape(input, layer.input_shape, to_string(layer.spec.kind));
    Tensor out;
    std::vector<std::size_t> argmax;
    std::vector<double> mask;
    switch (layer.spec.kind) {
        case LayerKind::conv1d:
            out = Tensor(layer.output_shape);
            kernels::conv1d_forward(layer.geometry, input.data, layer.weights, layer.bias,
                                    out.data);
            break;
        case LayerKind::maxpool1d: {
            auto r = maxpool1d_forward(input, layer.spec.pool_size);
            out = std::move(r.output);
            argmax = std::move(r.argmax);
            break;
        }
        case LayerKind::upsample1d:
            out = upsample1d_forward(input, layer.spec.pool_size);
            break;
        case LayerKind::dense:
            out = Tensor(layer.output_shape);
            kernels::dense_forward(layer.input_shape[0], layer.spec.units, input.data,
                                   layer.weights, layer.bias, out.data);
            break;
        case LayerKind::activation:
            out = activation_forward(layer.spec.activation, input);
            break;
        case LayerKind::dropout:
            out = dropout_forward(input, layer.spec.dropout_rate, mode, rng,
                                  mode == Mode::training ? &mask : nullptr);
            break;
        case LayerKind::flatten:
        case LayerKind::reshape:
            out = Tensor(layer.output_shape, input.data);
            break;
    }
    if (entry) {
        entry->input = input;
        entry->output = out;
        entry->argmax = std::move(argmax);
        entry->mask = std::move(mask);
    }
    return out;
}

Tensor layer_backward(const Layer& layer, const TraceEntry& entry, const Tensor& grad_output,
                      LayerGrads* grads) {
    if (entry.input.shape != layer.input_shape || entry.output.shape != layer.output_shape) {
        throw StateError(std::string("missing or stale forward trace for ") +
                         to_string(layer.spec.kind) + " layer");
    }
    require_shape(grad_output, layer.output_shape, "upstream gradient");
    switch (layer.spec.kind) {
        case LayerKind::conv1d:
        case LayerKind::dense: {
            Tensor grad_in(layer.input_shape);
            std::vector<double> scratch_w, scratch_b;
            std::span<double> gw, gb;
            if (grads) {
                if (grads->weights.size() != layer.weights.size()) {
                    grads->weights.assign(layer.weights.size(), 0.0);
                }
                if (grads->bias.size() != layer.bias.size()) {
                    grads->bias.assign(layer.bias.size(), 0.0);
                }
                gw = grads->weights;
                gb = grads->bias;
            } else {
                scratch_w.assign(layer.weights.size(), 0.0);
                scratch_b.assign(layer.bias.size(), 0.0);
                gw = scratch_w;
                gb = scratch_b;
            }
            if (layer.spec.kind == LayerKind::conv1d) {
                kernels::conv1d_backward(layer.geometry, entry.input.data, layer.weights,
                                         grad_output.data, grad_in.data, gw, gb);
            } else {
                kernels::dense_backward(layer.input_shape[0], layer.spec.units, entry.input.data,
                                        layer.weights, grad_output.data, grad_in.data, gw, gb);
            }
            return grad_in;
        }
        case LayerKind::maxpool1d:
            return maxpool1d_backward(layer.input_shape, entry.argmax, grad_output);
        case LayerKind::upsample1d:
            return upsample1d_backward(grad_output, layer.spec.pool_size);
        case LayerKind::activation:
            return activation_backward(layer.spec.activation, entry.input, entry.output,
                                       grad_output);
        case LayerKind::dropout: {
            if (entry.mask.empty()) return grad_output;
            Tensor grad(layer.input_shape);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                grad.data[i] = grad_output.data[i] * entry.mask[i];
            }
            return grad;
        }
        case LayerKind::flatten:
        case LayerKind::reshape:
            return Tensor(layer.input_shape, grad_output.data);
    }
    return {};
}

}  // namespace aee
