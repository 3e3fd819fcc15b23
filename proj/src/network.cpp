#include "aee/network.hpp"

#include "aee/errors.hpp"

namespace aee {

Network::Network(Shape input_shape, const std::vector<LayerSpec>& specs)
    : input_shape_(std::move(input_shape)) {
    Shape shape = input_shape_;
    layers_.reserve(specs.size());
    for (const auto& spec : specs) {
        layers_.push_back(make_layer(spec, shape));
        shape = layers_.back().output_shape;
    }
}

void Network::initialize(Rng& rng) {
    for (auto& layer : layers_) init_params(layer, rng);
}

const Shape& Network::output_shape() const {
    return layers_.empty() ? input_shape_ : layers_.back().output_shape;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
    return n;
}

Tensor Network::forward(const Tensor& input, Mode mode, Rng* rng, ForwardTrace* trace) const {
    require_shape(input, input_shape_, "network input");
    if (trace) {
        trace->clear();
        trace->resize(layers_.size());
    }
    Tensor x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layer_forward(layers_[i], x, mode, rng, trace ? &(*trace)[i] : nullptr);
    }
    return x;
}

Tensor Network::backward(const ForwardTrace& trace, const Tensor& grad_output,
                         std::vector<LayerGrads>* grads, std::size_t first) const {
    if (trace.size() != layers_.size()) {
        throw StateError("forward trace has " + std::to_string(trace.size()) +
                         " entries for a network of " + std::to_string(layers_.size()) +
                         " layers");
    }
    if (first > layers_.size()) throw ParameterError("backward start layer out of range");
    if (grads && grads->size() != layers_.size()) *grads = make_grads();
    Tensor g = grad_output;
    for (std::size_t i = layers_.size(); i-- > first;) {
        g = layer_backward(layers_[i], trace[i], g, grads ? &(*grads)[i] : nullptr);
    }
    return g;
}

std::vector<LayerGrads> Network::make_grads() const {
    std::vector<LayerGrads> grads(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        grads[i].weights.assign(layers_[i].weights.size(), 0.0);
        grads[i].bias.assign(layers_[i].bias.size(), 0.0);
    }
    return grads;
}

std::vector<std::span<double>> Network::parameters() {
    std::vector<std::span<double>> views;
    for (auto& layer : layers_) {
        if (!layer.weights.empty()) views.emplace_back(layer.weights);
        if (!layer.bias.empty()) views.emplace_back(layer.bias);
    }
    return views;
}

std::vector<std::span<const double>> Network::parameters() const {
    std::vector<std::span<const double>> views;
    for (const auto& layer : layers_) {
        if (!layer.weights.empty()) views.emplace_back(layer.weights);
        if (!layer.bias.empty()) views.emplace_back(layer.bias);
    }
    return views;
}

std::vector<std::span<const double>> grad_views(const std::vector<LayerGrads>& grads) {
    std::vector<std::span<const double>> views;
    for (const auto& g : grads) {
        if (!g.weights.empty()) views.emplace_back(g.weights);
        if (!g.bias.empty()) views.emplace_back(g.bias);
    }
    return views;
}

void add_grads(std::vector<LayerGrads>& into, const std::vector<LayerGrads>& from) {
    if (into.size() != from.size()) throw DimensionError("gradient sets differ in layer count");
    for (std::size_t i = 0; i < into.size(); ++i) {
        for (std::size_t j = 0; j < into[i].weights.size(); ++j) {
            into[i].weights[j] += from[i].weights[j];
        }
        for (std::size_t j = 0; j < into[i].bias.size(); ++j) into[i].bias[j] += from[i].bias[j];
    }
}

void scale_grads(std::vector<LayerGrads>& grads, double factor) {
    for (auto& g : grads) {
        for (double& v : g.weights) v *= factor;
        for (double& v : g.bias) v *= factor;
    }
}

}  // namespace aee
