#include "aee/explainers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <Eigen/Dense>

#include "aee/errors.hpp"
#include "aee/parallel.hpp"

namespace aee {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Evaluates every mask, in parallel, keeping results in mask order.
std::vector<std::vector<double>> evaluate_masks(const CoalitionFn& value,
                                                const std::vector<std::vector<bool>>& masks,
                                                std::size_t outputs) {
    std::vector<std::vector<double>> out(masks.size());
    parallel_for(masks.size(), [&](std::size_t i) { out[i] = value(masks[i]); });
    for (const auto& v : out) {
        if (v.size() != outputs) {
            throw DimensionError("value function returned " + std::to_string(v.size()) +
                                 " outputs, expected " + std::to_string(outputs));
        }
    }
    return out;
}

/// Solves A x = B with a symmetric factorization, verifying the result.
bool solve_spd(const MatrixXd& a, const MatrixXd& b, MatrixXd& x) {
    Eigen::LDLT<MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    x = ldlt.solve(b);
    if (!x.allFinite()) return false;
    const double residual = (a * x - b).norm();
    return residual <= 1e-6 * (1.0 + b.norm());
}

std::vector<bool> random_mask_with_off(std::size_t m, std::size_t off, Rng& rng) {
    std::vector<bool> mask(m, true);
    for (auto idx : rng.sample_without_replacement(m, off)) mask[idx] = false;
    return mask;
}

void check_target(Target target, std::size_t latent_dim) {
    if (!target.combined && target.index >= latent_dim) {
        throw ParameterError("latent target " + std::to_string(target.index) +
                             " out of range for latent dimension " + std::to_string(latent_dim));
    }
}

Explanation finish(std::vector<std::vector<double>> maps, Method method, Target target,
                   const TimeSeries& series) {
    Explanation e;
    e.method = method;
    e.target = target;
    e.series_id = series.id;
    e.values = target.combined ? combine_abs_mean(maps) : std::move(maps.at(target.index));
    for (double v : e.values) {
        if (!std::isfinite(v)) {
            throw NumericalError(std::string(to_string(method)) +
                                 " produced a non-finite importance value");
        }
    }
    return e;
}

std::vector<double> interpolate(std::span<const double> src, std::size_t length) {
    std::vector<double> out(length);
    const std::size_t n = src.size();
    if (n == length) {
        std::copy(src.begin(), src.end(), out.begin());
        return out;
    }
    if (n == 1) {
        std::fill(out.begin(), out.end(), src[0]);
        return out;
    }
    const double scale = static_cast<double>(n) / static_cast<double>(length);
    for (std::size_t j = 0; j < length; ++j) {
        double pos = (static_cast<double>(j) + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
        const auto i0 = static_cast<std::size_t>(pos);
        const std::size_t i1 = std::min(i0 + 1, n - 1);
        const double f = pos - static_cast<double>(i0);
        out[j] = src[i0] * (1.0 - f) + src[i1] * f;
    }
    return out;
}

CoalitionFn model_value(const AEModel& model, const TimeSeries& series,
                        const SegmentationScheme& scheme) {
    return [&model, &series, &scheme](const std::vector<bool>& mask) {
        return encode(model, apply_mask(series.values, scheme, mask));
    };
}

void require_length(const AEModel& model, const TimeSeries& series) {
    if (series.length() != model.input_length) {
        throw DimensionError("series '" + series.id + "' has length " +
                             std::to_string(series.length()) + ", model expects " +
                             std::to_string(model.input_length));
    }
}

}  // namespace

// LIME ------------------------------------------------------------------------

SegmentAttributions lime_attributions(const CoalitionFn& value, std::size_t m,
                                      std::size_t outputs, const LimeConfig& config) {
    if (m < 2) throw ParameterError("LIME needs at least 2 segments");
    if (config.samples < m) throw ParameterError("LIME needs at least as many samples as segments");
    if (!(config.kernel_width > 0.0)) throw ParameterError("LIME kernel width must be positive");
    if (!(config.ridge >= 0.0)) throw ParameterError("LIME ridge penalty must be non-negative");

    Rng rng(derive_seed(config.seed, 0x11AE));
    std::vector<std::vector<bool>> masks;
    masks.reserve(config.samples);
    masks.emplace_back(m, true);
    while (masks.size() < config.samples) {
        const std::size_t off = 1 + static_cast<std::size_t>(rng.below(m));
        masks.push_back(random_mask_with_off(m, off, rng));
    }
    const auto values = evaluate_masks(value, masks, outputs);

    const auto n = static_cast<Index>(masks.size());
    const auto p = static_cast<Index>(m);
    MatrixXd x(n, p);
    MatrixXd y(n, static_cast<Index>(outputs));
    VectorXd w(n);
    for (Index r = 0; r < n; ++r) {
        std::size_t on = 0;
        for (Index c = 0; c < p; ++c) {
            const bool bit = masks[r][c];
            x(r, c) = bit ? 1.0 : 0.0;
            on += bit ? 1 : 0;
        }
        // Cosine distance to the all-ones mask.
        const double d = on == 0 ? 1.0 : 1.0 - std::sqrt(static_cast<double>(on) / m);
        w(r) = std::exp(-(d * d) / (config.kernel_width * config.kernel_width));
        for (Index o = 0; o < static_cast<Index>(outputs); ++o) y(r, o) = values[r][o];
    }

    // Unpenalized intercept: centre on the weighted means.
    const double wsum = w.sum();
    const Eigen::RowVectorXd xbar = (w.transpose() * x) / wsum;
    const Eigen::RowVectorXd ybar = (w.transpose() * y) / wsum;
    x.rowwise() -= xbar;
    y.rowwise() -= ybar;
    const MatrixXd xtw = x.transpose() * w.asDiagonal();
    MatrixXd a = xtw * x;
    const MatrixXd b = xtw * y;

    MatrixXd beta;
    double lambda = config.ridge;
    MatrixXd reg = a + lambda * MatrixXd::Identity(p, p);
    if (!solve_spd(reg, b, beta)) {
        lambda = std::max(10.0 * lambda, 1e-6);
        reg = a + lambda * MatrixXd::Identity(p, p);
        if (!solve_spd(reg, b, beta)) {
            throw NumericalError("LIME normal equations are singular even after raising the ridge");
        }
    }

    SegmentAttributions out(outputs, std::vector<double>(m));
    for (std::size_t o = 0; o < outputs; ++o) {
        for (std::size_t s = 0; s < m; ++s) out[o][s] = beta(static_cast<Index>(s), static_cast<Index>(o));
    }
    return out;
}

// SHAP ------------------------------------------------------------------------

SegmentAttributions kernel_shap(const CoalitionFn& value, std::size_t m, std::size_t outputs,
                                std::size_t samples, std::uint64_t seed) {
    if (m < 2) throw ParameterError("KernelSHAP needs at least 2 segments");
    if (samples < 2) throw ParameterError("KernelSHAP needs at least 2 samples");

    // Coalition sizes are drawn with the total Shapley-kernel mass of each
    // size, so the regression weights are uniform over the drawn samples.
    std::vector<double> cumulative(m - 1);
    double total = 0.0;
    for (std::size_t s = 1; s < m; ++s) {
        total += static_cast<double>(m - 1) / static_cast<double>(s * (m - s));
        cumulative[s - 1] = total;
    }
    Rng rng(derive_seed(seed, 0x5AA9));
    std::vector<std::vector<bool>> masks;
    masks.reserve(samples + 2);
    masks.emplace_back(m, false);
    masks.emplace_back(m, true);
    while (masks.size() < samples + 2) {
        const double u = rng.uniform() * total;
        const std::size_t size =
            1 + static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                                         cumulative.begin());
        auto mask = random_mask_with_off(m, m - std::min(size, m - 1), rng);
        masks.push_back(mask);
        if (masks.size() < samples + 2) {
            mask.flip();
            masks.push_back(std::move(mask));
        }
    }
    const auto values = evaluate_masks(value, masks, outputs);
    const auto& v_empty = values[0];
    const auto& v_full = values[1];

    // Efficiency is enforced by eliminating the last segment:
    // phi_last = delta - sum(phi_others).
    const auto rows = static_cast<Index>(samples);
    const auto p = static_cast<Index>(m - 1);
    MatrixXd x(rows, p);
    MatrixXd y(rows, static_cast<Index>(outputs));
    for (Index r = 0; r < rows; ++r) {
        const auto& mask = masks[static_cast<std::size_t>(r) + 2];
        const double last = mask[m - 1] ? 1.0 : 0.0;
        for (Index c = 0; c < p; ++c) x(r, c) = (mask[c] ? 1.0 : 0.0) - last;
        for (std::size_t o = 0; o < outputs; ++o) {
            const double delta = v_full[o] - v_empty[o];
            y(r, static_cast<Index>(o)) =
                values[static_cast<std::size_t>(r) + 2][o] - v_empty[o] - last * delta;
        }
    }
    const MatrixXd a = x.transpose() * x;
    const MatrixXd b = x.transpose() * y;
    MatrixXd beta;
    if (!solve_spd(a, b, beta)) {
        const double jitter = 1e-10 * (1.0 + a.diagonal().maxCoeff());
        if (!solve_spd(a + jitter * MatrixXd::Identity(p, p), b, beta)) {
            throw NumericalError("KernelSHAP regression is singular; increase the sample count");
        }
    }

    SegmentAttributions out(outputs, std::vector<double>(m));
    for (std::size_t o = 0; o < outputs; ++o) {
        double sum = 0.0;
        for (std::size_t s = 0; s + 1 < m; ++s) {
            out[o][s] = beta(static_cast<Index>(s), static_cast<Index>(o));
            sum += out[o][s];
        }
        out[o][m - 1] = (v_full[o] - v_empty[o]) - sum;
    }
    return out;
}

SegmentAttributions exact_shapley(const CoalitionFn& value, std::size_t m, std::size_t outputs) {
    if (m < 1 || m > 12) {
        throw ParameterError("exact Shapley enumeration supports 1..12 segments, got " +
                             std::to_string(m));
    }
    const std::size_t count = std::size_t{1} << m;
    std::vector<std::vector<bool>> masks(count, std::vector<bool>(m));
    for (std::size_t bits = 0; bits < count; ++bits) {
        for (std::size_t s = 0; s < m; ++s) masks[bits][s] = (bits >> s) & 1U;
    }
    const auto values = evaluate_masks(value, masks, outputs);

    // weight(k) = k! (m - k - 1)! / m! = 1 / (m * C(m - 1, k))
    std::vector<double> weight(m);
    for (std::size_t k = 0; k < m; ++k) {
        double binom = 1.0;
        for (std::size_t i = 1; i <= k; ++i) {
            binom = binom * static_cast<double>(m - 1 - k + i) / static_cast<double>(i);
        }
        weight[k] = 1.0 / (static_cast<double>(m) * binom);
    }

    SegmentAttributions out(outputs, std::vector<double>(m, 0.0));
    for (std::size_t s = 0; s < m; ++s) {
        const std::size_t bit = std::size_t{1} << s;
        for (std::size_t bits = 0; bits < count; ++bits) {
            if (bits & bit) continue;
            const double w = weight[static_cast<std::size_t>(std::popcount(bits))];
            for (std::size_t o = 0; o < outputs; ++o) {
                out[o][s] += w * (values[bits | bit][o] - values[bits][o]);
            }
        }
    }
    return out;
}

// Grad-CAM --------------------------------------------------------------------

std::vector<std::vector<double>> gradcam_maps(const Network& encoder, const Tensor& input) {
    const auto& layers = encoder.layers();
    std::size_t conv = layers.size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].spec.kind == LayerKind::conv1d) conv = i;
    }
    if (conv == layers.size()) throw StateError("Grad-CAM needs an encoder with a conv layer");
    std::size_t feature = conv;
    if (conv + 1 < layers.size() && layers[conv + 1].spec.kind == LayerKind::activation) {
        feature = conv + 1;
    }

    ForwardTrace trace;
    const Tensor out = encoder.forward(input, Mode::inference, nullptr, &trace);
    const Tensor& maps = trace[feature].output;
    const std::size_t channels = maps.channels();
    const std::size_t len = maps.length();

    std::vector<std::vector<double>> result;
    for (std::size_t o = 0; o < out.size(); ++o) {
        Tensor onehot(out.shape);
        onehot.data[o] = 1.0;
        const Tensor grad = encoder.backward(trace, onehot, nullptr, feature + 1);
        std::vector<double> cam(len, 0.0);
        for (std::size_t c = 0; c < channels; ++c) {
            double weight = 0.0;
            for (std::size_t t = 0; t < len; ++t) weight += grad(c, t);
            weight /= static_cast<double>(len);
            for (std::size_t t = 0; t < len; ++t) cam[t] += weight * maps(c, t);
        }
        for (double& v : cam) v = std::max(v, 0.0);
        result.push_back(interpolate(cam, input.length()));
    }
    return result;
}

// LRP -------------------------------------------------------------------------

namespace {

double stabilize(double s, double eps) { return s + (s >= 0.0 ? eps : -eps); }

double layer_epsilon(std::span<const double> pre, double eps) {
    double scale = 0.0;
    for (double v : pre) scale = std::max(scale, std::abs(v));
    return eps * (scale > 0.0 ? scale : 1.0);
}

Tensor lrp_layer(const Layer& layer, const TraceEntry& entry, const Tensor& relevance,
                 double eps) {
    const Tensor& x = entry.input;
    switch (layer.spec.kind) {
        case LayerKind::dense: {
            const std::size_t in = layer.input_shape[0];
            const std::size_t out = layer.spec.units;
            std::vector<double> pre(out);
            const std::vector<double> zero_bias(out, 0.0);
            kernels::dense_forward(in, out, x.data, layer.weights, zero_bias, pre);
            const double e = layer_epsilon(pre, eps);
            std::vector<double> ratio(out);
            for (std::size_t k = 0; k < out; ++k) ratio[k] = relevance.data[k] / stabilize(pre[k], e);
            Tensor r(layer.input_shape);
            for (std::size_t j = 0; j < in; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < out; ++k) s += layer.weights[k * in + j] * ratio[k];
                r.data[j] = x.data[j] * s;
            }
            return r;
        }
        case LayerKind::conv1d: {
            const auto& g = layer.geometry;
            std::vector<double> pre(g.out_channels * g.out_length);
            const std::vector<double> zero_bias(g.out_channels, 0.0);
            kernels::conv1d_forward(g, x.data, layer.weights, zero_bias, pre);
            const double e = layer_epsilon(pre, eps);
            std::vector<double> ratio(pre.size());
            for (std::size_t k = 0; k < pre.size(); ++k) {
                ratio[k] = relevance.data[k] / stabilize(pre[k], e);
            }
            Tensor back(layer.input_shape);
            std::vector<double> gw(layer.weights.size(), 0.0), gb(layer.bias.size(), 0.0);
            kernels::conv1d_backward(g, x.data, layer.weights, ratio, back.data, gw, gb);
            for (std::size_t j = 0; j < back.size(); ++j) back.data[j] *= x.data[j];
            return back;
        }
        case LayerKind::maxpool1d:
            return maxpool1d_backward(layer.input_shape, entry.argmax, relevance);
        case LayerKind::upsample1d:
            return upsample1d_backward(relevance, layer.spec.pool_size);
        case LayerKind::activation:
        case LayerKind::dropout:
            return relevance;
        case LayerKind::flatten:
        case LayerKind::reshape:
            return Tensor(layer.input_shape, relevance.data);
    }
    return relevance;
}

}  // namespace

std::vector<std::vector<double>> lrp_maps(const Network& encoder, const Tensor& input,
                                          const LrpConfig& config) {
    if (!(config.epsilon > 0.0)) throw ParameterError("LRP epsilon must be positive");
    ForwardTrace trace;
    const Tensor out = encoder.forward(input, Mode::inference, nullptr, &trace);
    const auto& layers = encoder.layers();
    std::vector<std::vector<double>> result;
    for (std::size_t o = 0; o < out.size(); ++o) {
        Tensor r(out.shape);
        r.data[o] = out.data[o];
        for (std::size_t i = layers.size(); i-- > 0;) {
            r = lrp_layer(layers[i], trace[i], r, config.epsilon);
        }
        // Sum relevance over input channels per time step.
        std::vector<double> map(r.length(), 0.0);
        for (std::size_t c = 0; c < r.channels(); ++c) {
            for (std::size_t t = 0; t < r.length(); ++t) map[t] += r.data[c * r.length() + t];
        }
        result.push_back(std::move(map));
    }
    return result;
}

// Model-level entry points ----------------------------------------------------

Explanation gradcam_explain(const AEModel& model, const TimeSeries& series, Target target) {
    require_length(model, series);
    check_target(target, model.latent_dim());
    return finish(gradcam_maps(model.encoder, prepare_input(model, series.values)),
                  Method::gradcam, target, series);
}

Explanation lrp_explain(const AEModel& model, const TimeSeries& series, Target target,
                        const LrpConfig& config) {
    require_length(model, series);
    check_target(target, model.latent_dim());
    return finish(lrp_maps(model.encoder, prepare_input(model, series.values), config),
                  Method::lrp, target, series);
}

Explanation lime_explain(const AEModel& model, const TimeSeries& series, Target target,
                         const LimeConfig& config) {
    require_length(model, series);
    check_target(target, model.latent_dim());
    const auto scheme = SegmentationScheme::equal_width(series.length(), config.segments);
    const auto attr =
        lime_attributions(model_value(model, series, scheme), scheme.count(), model.latent_dim(), config);
    std::vector<std::vector<double>> maps;
    for (const auto& a : attr) maps.push_back(broadcast_segments(scheme, a));
    return finish(std::move(maps), Method::lime, target, series);
}

Explanation kshap_explain(const AEModel& model, const TimeSeries& series, Target target,
                          const ShapConfig& config) {
    require_length(model, series);
    check_target(target, model.latent_dim());
    const auto scheme = SegmentationScheme::equal_width(series.length(), config.segments);
    const auto value = model_value(model, series, scheme);
    const auto attr = config.exact
                          ? exact_shapley(value, scheme.count(), model.latent_dim())
                          : kernel_shap(value, scheme.count(), model.latent_dim(), config.samples,
                                        config.seed);
    std::vector<std::vector<double>> maps;
    for (const auto& a : attr) maps.push_back(broadcast_segments(scheme, a));
    return finish(std::move(maps), Method::shap, target, series);
}

Explanation explain(const AEModel& model, const TimeSeries& series, Method method, Target target,
                    const ExplainerConfig& config) {
    switch (method) {
        case Method::gradcam: return gradcam_explain(model, series, target);
        case Method::lime: return lime_explain(model, series, target, config.lime);
        case Method::shap: return kshap_explain(model, series, target, config.shap);
        case Method::lrp: return lrp_explain(model, series, target, config.lrp);
        case Method::aee: break;
    }
    throw ParameterError("aee explanations are produced by the ensemble, not a single explainer");
}

Explanation combined(const AEModel& model, const TimeSeries& series, Method method,
                     const ExplainerConfig& config) {
    return explain(model, series, method, Target::all(), config);
}

}  // namespace aee
