#pragma once

#include <span>
#include <vector>

#include "aee/layers.hpp"

namespace aee {

/// Ordered stack of layers with shapes fixed at construction.
class Network {
public:
    Network() = default;
    Network(Shape input_shape, const std::vector<LayerSpec>& specs);

    void initialize(Rng& rng);

    const Shape& input_shape() const noexcept { return input_shape_; }
    const Shape& output_shape() const;
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    std::size_t size() const noexcept { return layers_.size(); }
    std::size_t parameter_count() const;

    /// Dropout needs `rng` in training mode. When `trace` is given it is
    /// replaced by one entry per layer.
    Tensor forward(const Tensor& input, Mode mode = Mode::inference, Rng* rng = nullptr,
                   ForwardTrace* trace = nullptr) const;

    /// Backpropagates `grad_output` from the last layer down to layer
    /// `first` and returns the gradient w.r.t. that layer's input. Parameter
    /// gradients accumulate into `grads` (one slot per layer) when given.
    Tensor backward(const ForwardTrace& trace, const Tensor& grad_output,
                    std::vector<LayerGrads>* grads = nullptr, std::size_t first = 0) const;

    /// Zeroed gradient buffers shaped like the parameters.
    std::vector<LayerGrads> make_grads() const;

    /// Flat views over every parameter buffer, in layer order.
    std::vector<std::span<double>> parameters();
    std::vector<std::span<const double>> parameters() const;

private:
    Shape input_shape_;
    std::vector<Layer> layers_;
};

std::vector<std::span<const double>> grad_views(const std::vector<LayerGrads>& grads);
void add_grads(std::vector<LayerGrads>& into, const std::vector<LayerGrads>& from);
void scale_grads(std::vector<LayerGrads>& grads, double factor);

}  // namespace aee
