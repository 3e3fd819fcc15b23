#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "aee/kernels.hpp"
#include "aee/rng.hpp"
#include "aee/tensor.hpp"

namespace aee {

enum class LayerKind { conv1d, maxpool1d, upsample1d, dense, activation, dropout, flatten, reshape };
enum class ActivationKind { relu, tanh, sigmoid, softmax };
enum class Mode { inference, training };

const char* to_string(LayerKind kind);
const char* to_string(ActivationKind kind);
LayerKind parse_layer_kind(const std::string& name);
ActivationKind parse_activation(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::flatten;
    std::size_t filters = 0;
    std::size_t kernel_size = 0;
    std::size_t stride = 1;
    Padding padding = Padding::same;
    std::size_t pool_size = 2;  // also the upsampling factor
    std::size_t units = 0;
    ActivationKind activation = ActivationKind::relu;
    double dropout_rate = 0.0;
    Shape target_shape;  // reshape only

    static LayerSpec conv(std::size_t filters, std::size_t kernel,
                          Padding padding = Padding::same, std::size_t stride = 1);
    static LayerSpec maxpool(std::size_t pool = 2);
    static LayerSpec upsample(std::size_t factor = 2);
    static LayerSpec dense(std::size_t units);
    static LayerSpec act(ActivationKind a);
    static LayerSpec dropout(double rate);
    static LayerSpec flatten();
    static LayerSpec reshape(Shape target);

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// A layer bound to an input shape, with its parameters.
struct Layer {
    LayerSpec spec;
    Shape input_shape;
    Shape output_shape;
    std::vector<double> weights;
    std::vector<double> bias;
    Conv1dGeometry geometry;  // conv1d only

    bool has_params() const noexcept { return !weights.empty() || !bias.empty(); }
};

/// What one layer saw and produced during a forward pass.
struct TraceEntry {
    Tensor input;
    Tensor output;
    std::vector<std::size_t> argmax;  // maxpool1d
    std::vector<double> mask;         // dropout, training only
};
using ForwardTrace = std::vector<TraceEntry>;

struct LayerGrads {
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Binds a spec to an input shape; parameters are zero until initialized.
Layer make_layer(const LayerSpec& spec, const Shape& input_shape);

/// He-style uniform initialization, limit sqrt(6 / fan_in); zero biases.
void init_params(Layer& layer, Rng& rng);

Tensor layer_forward(const Layer& layer, const Tensor& input, Mode mode, Rng* rng,
                     TraceEntry* entry);

/// Returns the gradient w.r.t. the layer input; accumulates parameter
/// gradients into `grads` when given.
Tensor layer_backward(const Layer& layer, const TraceEntry& entry, const Tensor& grad_output,
                      LayerGrads* grads);

// Standalone operations -----------------------------------------------------

/// input [C_in x L_in], weights [C_out x C_in x K].
Tensor conv1d_forward(const Tensor& input, const Tensor& weights, std::span<const double> bias,
                      std::size_t stride, Padding padding);

struct Conv1dGrads {
    Tensor input;
    Tensor weights;
    std::vector<double> bias;
};
Conv1dGrads conv1d_backward(const Tensor& input, const Tensor& weights, std::size_t stride,
                            Padding padding, const Tensor& grad_output);

struct PoolResult {
    Tensor output;
    std::vector<std::size_t> argmax;  // flat input index per output element
};
/// Ties resolve to the lowest index in the window.
PoolResult maxpool1d_forward(const Tensor& input, std::size_t pool_size = 2);
Tensor maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                          const Tensor& grad_output);

Tensor upsample1d_forward(const Tensor& input, std::size_t factor = 2);
Tensor upsample1d_backward(const Tensor& grad_output, std::size_t factor = 2);

/// Softmax normalizes over the last axis (per channel row for rank 2).
Tensor activation_forward(ActivationKind kind, const Tensor& input);
Tensor activation_backward(ActivationKind kind, const Tensor& input, const Tensor& output,
                           const Tensor& grad_output);

/// Training mode keeps each unit with probability 1 - rate and scales it by
/// 1 / (1 - rate); inference mode is the identity. `mask` receives the
/// applied multipliers in training mode.
Tensor dropout_forward(const Tensor& input, double rate, Mode mode, Rng* rng,
                       std::vector<double>* mask = nullptr);

}  // namespace aee
