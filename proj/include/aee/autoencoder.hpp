#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aee/network.hpp"
#include "aee/optim.hpp"
#include "aee/series.hpp"

namespace aee {

/// Convolution block. In the encoder `resample` adds a max-pool after the
/// convolution; in the decoder it adds a nearest-neighbour upsample before it.
struct ConvBlock {
    std::size_t filters = 32;
    std::size_t kernel = 16;
    double dropout = 0.0;  // 0 disables the dropout layer
    bool resample = true;

    friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

struct DenseBlock {
    std::size_t units = 64;
    double dropout = 0.0;

    friend bool operator==(const DenseBlock&, const DenseBlock&) = default;
};

enum class Normalization { none, per_series };

struct TrainingConfig {
    int epochs = 200;
    std::size_t batch_size = 32;
    OptimizerConfig optimizer{};
    std::uint64_t seed = 42;
    std::array<double, 3> split{0.6, 0.2, 0.2};  // train / validation / test

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct AEConfig {
    std::vector<ConvBlock> encoder_blocks;
    std::vector<DenseBlock> encoder_dense;
    std::size_t latent_dim = 3;
    std::vector<DenseBlock> decoder_dense;
    std::vector<ConvBlock> decoder_blocks;
    ActivationKind activation = ActivationKind::relu;
    ActivationKind output_activation = ActivationKind::sigmoid;
    Padding padding = Padding::same;
    Normalization normalization = Normalization::per_series;
    TrainingConfig training{};

    /// Three conv blocks (32/64/128 filters, kernel 16, pool 2), a dense
    /// bottleneck of three units, and a mirrored decoder.
    static AEConfig default_config();

    /// Throws ParameterError on any violated bound; DimensionError when the
    /// architecture cannot map `input_length` onto itself.
    void validate(std::size_t input_length) const;

    friend bool operator==(const AEConfig&, const AEConfig&) = default;
};

void to_json(nlohmann::json& j, const AEConfig& c);
/// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, AEConfig& c);

std::vector<LayerSpec> encoder_specs(const AEConfig& config);
std::vector<LayerSpec> decoder_specs(const AEConfig& config, std::size_t input_length);

struct AEModel {
    static constexpr std::uint32_t kFormatVersion = 1;

    AEConfig config;
    std::size_t input_length = 0;
    Network encoder;
    Network decoder;

    std::size_t latent_dim() const noexcept { return config.latent_dim; }
    std::size_t parameter_count() const {
        return encoder.parameter_count() + decoder.parameter_count();
    }
};

/// Untrained model with seeded initial parameters.
AEModel build_model(const AEConfig& config, std::size_t input_length, std::uint64_t seed);

/// Applies the model's input normalization and returns a [1 x N] tensor.
Tensor prepare_input(const AEModel& model, std::span<const double> series);

std::vector<double> encode(const AEModel& model, std::span<const double> series);
/// Output is in the normalized input scale.
std::vector<double> decode(const AEModel& model, std::span<const double> latent);
/// Reconstruction mapped back to the series' own scale.
std::vector<double> reconstruct(const AEModel& model, std::span<const double> series);
/// Reconstruction MSE in the normalized scale (the training objective).
double reconstruction_mse(const AEModel& model, std::span<const double> series);

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct SplitInfo {
    std::size_t size = 0;
    std::size_t nok = 0;
    double nok_fraction() const { return size ? static_cast<double>(nok) / size : 0.0; }
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double test_mse = 0.0;
    SplitInfo train;
    SplitInfo validation;
    SplitInfo test;
    double wall_seconds = 0.0;
};

void to_json(nlohmann::json& j, const TrainReport& r);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Stratified by label: each class is divided with the configured
/// fractions, so each split's NOK rate tracks the corpus rate.
Split stratified_split(const Dataset& data, const std::array<double, 3>& fractions,
                       std::uint64_t seed);

struct TrainResult {
    AEModel model;
    TrainReport report;
    Split split;
};

/// Trains on the full OK+NOK mix of the training split. Parameters of the
/// epoch with the lowest validation MSE are kept.
TrainResult train(const Dataset& data, const AEConfig& config);

/// Search space of the architecture tuner.
struct SearchSpace {
    std::vector<std::size_t> filters{16, 32, 64, 128};
    std::vector<std::size_t> kernels{8, 16, 32};
    std::vector<double> dropout_rates{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<std::size_t> units{32, 64, 128, 256};
    std::vector<ActivationKind> activations{ActivationKind::relu, ActivationKind::tanh,
                                            ActivationKind::sigmoid, ActivationKind::softmax};
    std::size_t min_conv_blocks = 1;
    std::size_t max_conv_blocks = 3;
    std::size_t max_dense_blocks = 2;
};

struct SearchEntry {
    AEConfig config;
    double val_mse = 0.0;
};

struct SearchResult {
    AEConfig best;
    std::vector<SearchEntry> leaderboard;  // ascending validation MSE
};

/// Draws one configuration uniformly from the space; training settings are
/// copied from `base`.
AEConfig sample_config(const SearchSpace& space, const AEConfig& base, Rng& rng);

SearchResult random_search(const Dataset& data, const SearchSpace& space, const AEConfig& base,
                           int trials, int epochs, std::uint64_t seed);

void save_model(const AEModel& model, const std::filesystem::path& path);
AEModel load_model(const std::filesystem::path& path);
std::vector<char> serialize_model(const AEModel& model);
AEModel deserialize_model(std::span<const char> bytes);

}  // namespace aee
