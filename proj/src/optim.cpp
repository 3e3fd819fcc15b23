#include "aee/optim.hpp"

#include <cmath>

#include "aee/errors.hpp"

namespace aee {

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
    if (prediction.shape != target.shape) {
        throw DimensionError("mse_loss shape mismatch: " + shape_string(prediction.shape) +
                             " vs " + shape_string(target.shape));
    }
    LossResult r{0.0, Tensor(prediction.shape)};
    const double n = static_cast<double>(prediction.size());
    if (prediction.size() == 0) return r;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction.data[i] - target.data[i];
        r.value += d * d;
        r.grad.data[i] = 2.0 * d / n;
    }
    r.value /= n;
    return r;
}

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw ParameterError("unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
    if (!(config_.lr > 0.0)) throw ParameterError("learning rate must be positive");
    if (config_.kind == OptimizerKind::adam &&
        !(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 &&
          config_.beta2 < 1.0 && config_.epsilon > 0.0)) {
        throw ParameterError("adam needs betas in [0, 1) and a positive epsilon");
    }
}

void Optimizer::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size()) {
        throw DimensionError("optimizer: parameter and gradient lists differ in length");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) {
            throw DimensionError("optimizer: parameter and gradient buffers differ in size");
        }
    }
    if (config_.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            for (std::size_t j = 0; j < params[i].size(); ++j) {
                params[i][j] -= config_.lr * grads[i][j];
            }
        }
        return;
    }

    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    } else if (m_.size() != params.size()) {
        throw StateError("optimizer state was built for a different parameter set");
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            const double g = grads[i][j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            params[i][j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

}  // namespace aee
