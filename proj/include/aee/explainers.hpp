#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "aee/autoencoder.hpp"

namespace aee {

enum class Method { gradcam, lime, shap, lrp, aee };
const char* to_string(Method m);
Method parse_method(const std::string& name);

/// Either one latent unit or all of them combined.
struct Target {
    bool combined = true;
    std::size_t index = 0;

    static Target latent(std::size_t i) { return {false, i}; }
    static Target all() { return {true, 0}; }
    std::string name() const;

    friend bool operator==(const Target&, const Target&) = default;
};
Target parse_target(const std::string& name);

/// Per-time-step importance for one series.
struct Explanation {
    std::vector<double> values;
    Method method = Method::gradcam;
    Target target;
    std::string series_id;
};

/// Contiguous, disjoint, covering index ranges [begin, end).
struct SegmentationScheme {
    std::vector<std::pair<std::size_t, std::size_t>> segments;

    /// m windows of (nearly) equal width; the first length % m windows get one
    /// extra point.
    static SegmentationScheme equal_width(std::size_t length, std::size_t m);
    std::size_t count() const noexcept { return segments.size(); }
    void validate(std::size_t length) const;
};

/// Replaces every segment whose mask entry is false by the straight line
/// between the segment's first and last values.
std::vector<double> apply_mask(std::span<const double> series, const SegmentationScheme& scheme,
                               const std::vector<bool>& mask);

/// Spreads one value per segment over the segment's time steps.
std::vector<double> broadcast_segments(const SegmentationScheme& scheme,
                                       std::span<const double> per_segment);

/// Mean of absolute values across per-latent maps.
std::vector<double> combine_abs_mean(const std::vector<std::vector<double>>& maps);

/// Value of a coalition of segments, one entry per model output. Called
/// concurrently from several threads; must be pure.
using CoalitionFn = std::function<std::vector<double>(const std::vector<bool>& mask)>;

struct LimeConfig {
    std::size_t segments = 64;
    std::size_t samples = 1000;
    double kernel_width = 0.25;
    double ridge = 1.0;
    std::uint64_t seed = 0;

    friend bool operator==(const LimeConfig&, const LimeConfig&) = default;
};

struct ShapConfig {
    std::size_t segments = 64;
    std::size_t samples = 2048;
    bool exact = false;
    std::uint64_t seed = 0;

    friend bool operator==(const ShapConfig&, const ShapConfig&) = default;
};

struct LrpConfig {
    double epsilon = 1e-6;

    friend bool operator==(const LrpConfig&, const LrpConfig&) = default;
};

struct ExplainerConfig {
    LimeConfig lime;
    ShapConfig shap;
    LrpConfig lrp;

    friend bool operator==(const ExplainerConfig&, const ExplainerConfig&) = default;
};

/// Per-output attributions, outer index = model output, inner = segment.
using SegmentAttributions = std::vector<std::vector<double>>;

/// Weighted ridge surrogate over random segment masks.
SegmentAttributions lime_attributions(const CoalitionFn& value, std::size_t segments,
                                      std::size_t outputs, const LimeConfig& config);

/// KernelSHAP: paired coalition sampling and weighted least squares with the
/// efficiency constraint enforced exactly.
SegmentAttributions kernel_shap(const CoalitionFn& value, std::size_t segments,
                                std::size_t outputs, std::size_t samples, std::uint64_t seed);

/// Exact Shapley values by enumerating all 2^m coalitions (m <= 12).
SegmentAttributions exact_shapley(const CoalitionFn& value, std::size_t segments,
                                  std::size_t outputs);

/// Grad-CAM maps for every output of `encoder`, using the feature maps of
/// its last convolution (after its activation), interpolated to the input
/// length.
std::vector<std::vector<double>> gradcam_maps(const Network& encoder, const Tensor& input);

/// Epsilon-rule LRP maps for every output of `encoder`. Epsilon is scaled
/// by each layer's largest pre-activation magnitude.
std::vector<std::vector<double>> lrp_maps(const Network& encoder, const Tensor& input,
                                          const LrpConfig& config);

Explanation gradcam_explain(const AEModel& model, const TimeSeries& series, Target target);
Explanation lime_explain(const AEModel& model, const TimeSeries& series, Target target,
                         const LimeConfig& config);
Explanation kshap_explain(const AEModel& model, const TimeSeries& series, Target target,
                          const ShapConfig& config);
Explanation lrp_explain(const AEModel& model, const TimeSeries& series, Target target,
                        const LrpConfig& config);

/// Dispatches on `method` (not aee; see ensemble).
Explanation explain(const AEModel& model, const TimeSeries& series, Method method, Target target,
                    const ExplainerConfig& config);

/// Combined-feature explanation of one method.
Explanation combined(const AEModel& model, const TimeSeries& series, Method method,
                     const ExplainerConfig& config);

}  // namespace aee
