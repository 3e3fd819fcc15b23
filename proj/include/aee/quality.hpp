#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aee/ensemble.hpp"
#include "aee/explainers.hpp"

namespace aee {

enum class PerturbStrategy { shuffle, zero, mean };
const char* to_string(PerturbStrategy s);
PerturbStrategy parse_strategy(const std::string& name);

struct PerturbationConfig {
    double fraction = 0.1;
    PerturbStrategy strategy = PerturbStrategy::shuffle;
    std::uint64_t seed = 0;

    friend bool operator==(const PerturbationConfig&, const PerturbationConfig&) = default;
};

/// Number of positions touched for a series of `length` points: ceil(k * N).
std::size_t perturb_count(std::size_t length, double fraction);

struct Perturbation {
    std::vector<double> values;
    std::vector<std::size_t> positions;  // sorted ascending
    bool tied = false;                   // importance was constant; first indices taken
};

/// Perturbs the most important positions (ties go to the lower index).
Perturbation perturb_by_explanation(std::span<const double> series,
                                    std::span<const double> importance,
                                    const PerturbationConfig& config);

/// Same mechanics with positions drawn uniformly at random.
Perturbation perturb_random(std::span<const double> series, const PerturbationConfig& config);

/// Latent Euclidean distance divided by sqrt(latent_dim).
double qm_distance(const AEModel& model, std::span<const double> a, std::span<const double> b);

struct IqrStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double lower_fence = 0.0;
    double upper_fence = 0.0;

    double iqr() const noexcept { return q3 - q1; }
};

/// Linear-interpolation quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double p);
IqrStats iqr_stats(std::span<const double> values);

struct QMConfig {
    PerturbationConfig perturbation;
    std::size_t trials = 5;

    friend bool operator==(const QMConfig&, const QMConfig&) = default;
};

struct QMResult {
    std::string series_id;
    Label label = Label::ok;
    double d_self = 0.0;
    double d_random = 0.0;
    double d_xai = 0.0;
    bool ordering_satisfied = false;
    bool tied = false;
};

enum class Condition { noise, xai };
const char* to_string(Condition c);

struct QMStratum {
    Label label = Label::ok;
    Condition condition = Condition::noise;
    std::size_t count = 0;
    bool empty = true;
    IqrStats stats;
};

struct QMSummary {
    Method method = Method::gradcam;
    // Raw distances were mapped to [0, 1] with these before summarizing.
    double norm_min = 0.0;
    double norm_max = 0.0;
    std::vector<QMStratum> strata;  // ok/noise, ok/xai, nok/noise, nok/xai

    const QMStratum& at(Label label, Condition condition) const;
};

struct QMEvaluation {
    Method method = Method::gradcam;
    std::vector<QMResult> results;
    QMSummary summary;

    /// Fraction of instances of `label` whose ordering holds; nullopt if none.
    std::optional<double> ordering_rate(Label label) const;
    /// Median of the raw distances of one stratum; nullopt if empty.
    std::optional<double> median(Label label, Condition condition) const;
};

/// Importance map used to guide the perturbation.
using ImportanceFn = std::function<std::vector<double>(const TimeSeries&)>;

/// Combined explanation of `method` (aee fuses the four base methods).
ImportanceFn importance_for(const AEModel& model, Method method, const ExplainerConfig& config);

/// Runs the measurement over labeled `data`. Randomness for instance i and
/// trial t derives from (config.perturbation.seed, i, t).
QMEvaluation evaluate(const AEModel& model, const Dataset& data, Method method,
                      const ImportanceFn& importance, const QMConfig& config);

QMSummary summarize(Method method, const std::vector<QMResult>& results);

/// All NOK indices plus up to `ok_count` OK indices drawn at random, sorted.
std::vector<std::size_t> select_instances(const Dataset& data, std::size_t ok_count,
                                          std::uint64_t seed);

}  // namespace aee
