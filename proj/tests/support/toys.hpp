#pragma once

// Small seeded encoders and value functions shared by the explainer tests
// and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <vector>

#include "aee/autoencoder.hpp"
#include "aee/explainers.hpp"
#include "aee/network.hpp"
#include "aee/rng.hpp"

namespace toys {

/// conv -> tanh -> maxpool -> flatten -> dense, random weights and biases.
inline aee::Network conv_encoder(std::size_t length, std::size_t outputs, std::uint64_t seed,
                                 aee::ActivationKind act = aee::ActivationKind::tanh) {
    using aee::LayerSpec;
    aee::Network net({1, length}, {LayerSpec::conv(3, 5), LayerSpec::act(act), LayerSpec::maxpool(2),
                                   LayerSpec::conv(2, 3), LayerSpec::act(act), LayerSpec::flatten(),
                                   LayerSpec::dense(outputs)});
    aee::Rng rng(seed);
    net.initialize(rng);
    for (auto& layer : net.layers()) {
        for (auto& b : layer.bias) b = rng.uniform(-0.1, 0.1);
    }
    return net;
}

inline std::vector<double> toy_series(std::size_t length, std::uint64_t seed) {
    aee::Rng rng(seed);
    std::vector<double> v(length);
    for (std::size_t i = 0; i < length; ++i) {
        v[i] = std::sin(0.4 * static_cast<double>(i)) + 0.3 * rng.uniform(-1.0, 1.0);
    }
    return v;
}

/// Small autoencoder trained for a few epochs on toy series, so its biases
/// and dead units look like those of a fitted model rather than noise.
inline aee::AEModel trained_autoencoder(std::size_t length, std::uint64_t seed, int epochs = 15) {
    aee::AEConfig c;
    c.encoder_blocks = {{4, 5, 0.0, true}, {4, 5, 0.0, true}};
    c.latent_dim = 3;
    c.decoder_blocks = {{4, 5, 0.0, true}, {4, 5, 0.0, true}};
    c.training.epochs = epochs;
    c.training.batch_size = 8;
    c.training.seed = seed;
    aee::Dataset data;
    aee::Rng rng(seed);
    for (int i = 0; i < 40; ++i) {
        data.push_back({"t" + std::to_string(i), toy_series(length, rng.next_u64()), aee::Label::ok});
    }
    return aee::train(data, c).model;
}

/// v(S) = encoder outputs of the series with segments outside S masked.
/// Holds references; the arguments must outlive the returned function.
inline aee::CoalitionFn coalition(const aee::Network& net, const std::vector<double>& series,
                                  const aee::SegmentationScheme& scheme) {
    return [&net, &series, &scheme](const std::vector<bool>& mask) {
        return net.forward(aee::Tensor::series(aee::apply_mask(series, scheme, mask))).data;
    };
}

}  // namespace toys
