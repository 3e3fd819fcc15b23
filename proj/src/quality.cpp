#include "aee/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aee/errors.hpp"
#include "aee/parallel.hpp"
#include "aee/rng.hpp"

namespace aee {

const char* to_string(PerturbStrategy s) {
    switch (s) {
        case PerturbStrategy::shuffle: return "shuffle";
        case PerturbStrategy::zero: return "zero";
        case PerturbStrategy::mean: return "mean";
    }
    return "?";
}

PerturbStrategy parse_strategy(const std::string& name) {
    for (auto s : {PerturbStrategy::shuffle, PerturbStrategy::zero, PerturbStrategy::mean}) {
        if (name == to_string(s)) return s;
    }
    throw ParameterError("unknown perturbation strategy '" + name + "'");
}

const char* to_string(Condition c) { return c == Condition::noise ? "noise" : "xai"; }

std::size_t perturb_count(std::size_t length, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ParameterError("perturbation fraction must lie in (0, 1]");
    }
    // The small slack keeps 0.1 * 1000 from rounding up to 101.
    const double raw = fraction * static_cast<double>(length);
    const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    if (k < 1) throw ParameterError("perturbation fraction selects no points");
    return std::min(k, length);
}

namespace {

void apply_strategy(std::span<const double> series, Perturbation& p, PerturbStrategy strategy,
                    std::uint64_t seed) {
    p.values.assign(series.begin(), series.end());
    switch (strategy) {
        case PerturbStrategy::shuffle: {
            std::vector<double> picked;
            picked.reserve(p.positions.size());
            for (auto i : p.positions) picked.push_back(series[i]);
            Rng rng(seed);
            rng.shuffle(std::span<double>(picked));
            for (std::size_t j = 0; j < p.positions.size(); ++j) p.values[p.positions[j]] = picked[j];
            break;
        }
        case PerturbStrategy::zero:
            for (auto i : p.positions) p.values[i] = 0.0;
            break;
        case PerturbStrategy::mean: {
            const double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                                static_cast<double>(series.size());
            for (auto i : p.positions) p.values[i] = mean;
            break;
        }
    }
}

}  // namespace

Perturbation perturb_by_explanation(std::span<const double> series,
                                    std::span<const double> importance,
                                    const PerturbationConfig& config) {
    if (importance.size() != series.size()) {
        throw DimensionError("explanation has " + std::to_string(importance.size()) +
                             " values for a series of length " + std::to_string(series.size()));
    }
    for (double v : importance) {
        if (!std::isfinite(v)) throw NumericalError("explanation contains a non-finite value");
    }
    const std::size_t k = perturb_count(series.size(), config.fraction);
    std::vector<std::size_t> order(series.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
    Perturbation p;
    p.positions.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(p.positions.begin(), p.positions.end());
    const auto [lo, hi] = std::minmax_element(importance.begin(), importance.end());
    p.tied = *lo == *hi;
    apply_strategy(series, p, config.strategy, config.seed);
    return p;
}

Perturbation perturb_random(std::span<const double> series, const PerturbationConfig& config) {
    if (series.empty()) throw DimensionError("cannot perturb an empty series");
    const std::size_t k = perturb_count(series.size(), config.fraction);
    Perturbation p;
    Rng rng(derive_seed(config.seed, 0x706f73));  // positions and shuffle use separate streams
    p.positions = rng.sample_without_replacement(series.size(), k);
    std::sort(p.positions.begin(), p.positions.end());
    apply_strategy(series, p, config.strategy, config.seed);
    return p;
}

double qm_distance(const AEModel& model, std::span<const double> a, std::span<const double> b) {
    const auto za = encode(model, a);
    const auto zb = encode(model, b);
    double s = 0.0;
    for (std::size_t i = 0; i < za.size(); ++i) s += (za[i] - zb[i]) * (za[i] - zb[i]);
    return std::sqrt(s) / std::sqrt(static_cast<double>(za.size()));
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DataError("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IqrStats iqr_stats(std::span<const double> values) {
    if (values.empty()) throw DataError("IQR statistics need at least one value");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    IqrStats s;
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    s.lower_fence = s.q1 - 1.5 * s.iqr();
    s.upper_fence = s.q3 + 1.5 * s.iqr();
    return s;
}

const QMStratum& QMSummary::at(Label label, Condition condition) const {
    for (const auto& s : strata) {
        if (s.label == label && s.condition == condition) return s;
    }
    throw StateError("summary has no such stratum");
}

std::optional<double> QMEvaluation::ordering_rate(Label label) const {
    std::size_t n = 0;
    std::size_t ok = 0;
    for (const auto& r : results) {
        if (r.label != label) continue;
        ++n;
        if (r.ordering_satisfied) ++ok;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(ok) / static_cast<double>(n);
}

std::optional<double> QMEvaluation::median(Label label, Condition condition) const {
    std::vector<double> v;
    for (const auto& r : results) {
        if (r.label == label) v.push_back(condition == Condition::noise ? r.d_random : r.d_xai);
    }
    if (v.empty()) return std::nullopt;
    return iqr_stats(v).median;
}

ImportanceFn importance_for(const AEModel& model, Method method, const ExplainerConfig& config) {
    if (method == Method::aee) {
        return [&model, config](const TimeSeries& s) {
            return aee_explain(model, s, Target::all(), config).values;
        };
    }
    return [&model, method, config](const TimeSeries& s) {
        return combined(model, s, method, config).values;
    };
}

QMSummary summarize(Method method, const std::vector<QMResult>& results) {
    QMSummary out;
    out.method = method;
    bool any = false;
    for (const auto& r : results) {
        for (double d : {r.d_random, r.d_xai}) {
            if (!any) {
                out.norm_min = out.norm_max = d;
                any = true;
            }
            out.norm_min = std::min(out.norm_min, d);
            out.norm_max = std::max(out.norm_max, d);
        }
    }
    const double range = out.norm_max - out.norm_min;
    auto norm = [&](double d) { return range > 0.0 ? (d - out.norm_min) / range : 0.0; };
    for (Label label : {Label::ok, Label::nok}) {
        for (Condition cond : {Condition::noise, Condition::xai}) {
            QMStratum s;
            s.label = label;
            s.condition = cond;
            std::vector<double> v;
            for (const auto& r : results) {
                if (r.label != label) continue;
                v.push_back(norm(cond == Condition::noise ? r.d_random : r.d_xai));
            }
            s.count = v.size();
            s.empty = v.empty();
            if (!v.empty()) s.stats = iqr_stats(v);
            out.strata.push_back(s);
        }
    }
    return out;
}

QMEvaluation evaluate(const AEModel& model, const Dataset& data, Method method,
                      const ImportanceFn& importance, const QMConfig& config) {
    if (config.trials < 1) throw ParameterError("at least one random trial is required");
    if (!data.empty()) common_length(data);
    for (const auto& s : data) {
        if (!s.label) throw DataError("series '" + s.id + "' has no label");
    }
    QMEvaluation out;
    out.method = method;
    out.results.resize(data.size());
    const std::uint64_t master = config.perturbation.seed;
    parallel_for(data.size(), [&](std::size_t i) {
        const auto& t = data[i];
        QMResult r;
        r.series_id = t.id;
        r.label = *t.label;
        r.d_self = qm_distance(model, t.values, t.values);

        PerturbationConfig pc = config.perturbation;
        double sum = 0.0;
        for (std::size_t trial = 0; trial < config.trials; ++trial) {
            pc.seed = derive_seed(master, i, trial + 1);
            sum += qm_distance(model, t.values, perturb_random(t.values, pc).values);
        }
        r.d_random = sum / static_cast<double>(config.trials);

        pc.seed = derive_seed(master, i, 0);
        const auto imp = importance(t);
        const auto px = perturb_by_explanation(t.values, imp, pc);
        r.tied = px.tied;
        r.d_xai = qm_distance(model, t.values, px.values);
        r.ordering_satisfied = r.d_self <= r.d_random && r.d_random <= r.d_xai;
        out.results[i] = std::move(r);
    });
    out.summary = summarize(method, out.results);
    return out;
}

std::vector<std::size_t> select_instances(const Dataset& data, std::size_t ok_count,
                                          std::uint64_t seed) {
    std::vector<std::size_t> ok;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].label) throw DataError("series '" + data[i].id + "' has no label");
        (data[i].is_nok() ? out : ok).push_back(i);
    }
    Rng rng(seed);
    const auto pick = rng.sample_without_replacement(ok.size(), std::min(ok_count, ok.size()));
    for (auto j : pick) out.push_back(ok[j]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace aee
