#pragma once

#include <map>
#include <optional>
#include <vector>

#include "aee/explainers.hpp"

namespace aee {

struct ScalingBounds {
    double a_min = 0.0;
    double a_max = 1.0;

    void validate() const;
};

struct ScaledExplanation {
    std::vector<double> values;
    bool degenerate = false;  // input was constant; values are all a_min
};

/// Min-max scales one explanation over its own values into [a_min, a_max].
ScaledExplanation scale(std::span<const double> values, const ScalingBounds& bounds = {});

/// Explanations of one series from several methods, same target mode.
struct ExplanationSet {
    std::map<Method, Explanation> explanations;

    void add(Explanation e);
    void validate() const;
};

using MethodWeights = std::map<Method, double>;

struct AggregatedExplanation {
    std::vector<double> values;
    ScalingBounds bounds;
    MethodWeights weights;
    std::vector<Method> methods;
    std::vector<Method> degenerate;  // methods whose explanation was constant
    std::string series_id;
    Target target;

    Explanation as_explanation() const;
};

/// Scales every member and takes the weighted pointwise mean. Without
/// weights every method counts equally.
AggregatedExplanation aggregate(const ExplanationSet& set, const ScalingBounds& bounds = {},
                                const std::optional<MethodWeights>& weights = std::nullopt);

/// The four base methods' explanations for one series and target, fused.
AggregatedExplanation aee_explain(const AEModel& model, const TimeSeries& series, Target target,
                                  const ExplainerConfig& config, const ScalingBounds& bounds = {},
                                  const std::optional<MethodWeights>& weights = std::nullopt);

/// Base methods fused by aee_explain, in order.
inline constexpr Method kBaseMethods[] = {Method::gradcam, Method::lime, Method::shap, Method::lrp};

}  // namespace aee
