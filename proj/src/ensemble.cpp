#include "aee/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "aee/errors.hpp"

namespace aee {

void ScalingBounds::validate() const {
    if (!std::isfinite(a_min) || !std::isfinite(a_max) || !(a_max > a_min)) {
        throw ParameterError("scaling bounds need finite a_min < a_max");
    }
}

ScaledExplanation scale(std::span<const double> values, const ScalingBounds& bounds) {
    bounds.validate();
    if (values.empty()) throw DimensionError("cannot scale an empty explanation");
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericalError("explanation contains a non-finite value");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    ScaledExplanation out;
    out.values.resize(values.size());
    if (hi == lo) {
        std::fill(out.values.begin(), out.values.end(), bounds.a_min);
        out.degenerate = true;
        return out;
    }
    const double span = bounds.a_max - bounds.a_min;
    for (std::size_t i = 0; i < values.size(); ++i) {
        // Extremes land exactly on the bounds, ties included.
        if (values[i] == lo) {
            out.values[i] = bounds.a_min;
        } else if (values[i] == hi) {
            out.values[i] = bounds.a_max;
        } else {
            const double v = bounds.a_min + (values[i] - lo) * span / (hi - lo);
            out.values[i] = std::clamp(v, bounds.a_min, bounds.a_max);
        }
    }
    return out;
}

void ExplanationSet::add(Explanation e) {
    const Method m = e.method;
    if (m == Method::aee) throw ParameterError("an ensemble cannot contain another ensemble");
    if (!explanations.emplace(m, std::move(e)).second) {
        throw ParameterError(std::string("duplicate explanation for method ") + to_string(m));
    }
}

void ExplanationSet::validate() const {
    if (explanations.size() < 2) throw ParameterError("an ensemble needs at least two methods");
    const auto& first = explanations.begin()->second;
    for (const auto& [m, e] : explanations) {
        if (e.values.size() != first.values.size()) {
            throw DimensionError(std::string("explanation from ") + to_string(m) + " has length " +
                                 std::to_string(e.values.size()) + ", expected " +
                                 std::to_string(first.values.size()));
        }
        if (e.series_id != first.series_id) {
            throw DataError("explanations belong to different series");
        }
        if (e.target.combined != first.target.combined) {
            throw DataError("explanations mix individual and combined targets");
        }
    }
}

Explanation AggregatedExplanation::as_explanation() const {
    return {values, Method::aee, target, series_id};
}

AggregatedExplanation aggregate(const ExplanationSet& set, const ScalingBounds& bounds,
                                const std::optional<MethodWeights>& weights) {
    set.validate();
    bounds.validate();
    MethodWeights w;
    if (weights) {
        double total = 0.0;
        for (const auto& [m, e] : set.explanations) {
            const auto it = weights->find(m);
            if (it == weights->end()) {
                throw ParameterError(std::string("no weight given for method ") + to_string(m));
            }
            if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
                throw ParameterError("method weights must be finite and nonnegative");
            }
            w[m] = it->second;
            total += it->second;
        }
        if (!(total > 0.0)) throw ParameterError("method weights must sum to a positive value");
    } else {
        for (const auto& [m, e] : set.explanations) w[m] = 1.0;
    }

    AggregatedExplanation out;
    const auto& first = set.explanations.begin()->second;
    out.bounds = bounds;
    out.series_id = first.series_id;
    out.target = first.target;
    out.values.assign(first.values.size(), 0.0);
    double total = 0.0;
    for (const auto& [m, e] : set.explanations) {
        const auto s = scale(e.values, bounds);
        out.methods.push_back(m);
        if (s.degenerate) out.degenerate.push_back(m);
        const double wm = w.at(m);
        total += wm;
        for (std::size_t i = 0; i < s.values.size(); ++i) out.values[i] += wm * s.values[i];
    }
    for (double& v : out.values) v = std::clamp(v / total, bounds.a_min, bounds.a_max);
    out.weights = std::move(w);
    return out;
}

AggregatedExplanation aee_explain(const AEModel& model, const TimeSeries& series, Target target,
                                  const ExplainerConfig& config, const ScalingBounds& bounds,
                                  const std::optional<MethodWeights>& weights) {
    ExplanationSet set;
    for (Method m : kBaseMethods) set.add(explain(model, series, m, target, config));
    return aggregate(set, bounds, weights);
}

}  // namespace aee
