#pragma once

#include <span>
#include <string>
#include <vector>

#include "aee/tensor.hpp"

namespace aee {

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d loss / d prediction
};

/// Mean of squared elementwise differences, with its gradient
/// 2 (prediction - target) / N.
LossResult mse_loss(const Tensor& prediction, const Tensor& target);

enum class OptimizerKind { sgd, adam };
const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Owns the Adam moment estimates for one training run.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config);

    const OptimizerConfig& config() const noexcept { return config_; }

    void step(const std::vector<std::span<double>>& params,
              const std::vector<std::span<const double>>& grads);

private:
    OptimizerConfig config_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace aee
