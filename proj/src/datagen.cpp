#include "aee/datagen.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "aee/errors.hpp"
#include "aee/json_util.hpp"
#include "aee/parallel.hpp"
#include "aee/rng.hpp"

namespace aee {

using nlohmann::json;

void GeneratorConfig::validate() const {
    if (length < 64) throw ParameterError("generator length must be >= 64");
    if (size < 1) throw ParameterError("corpus size must be >= 1");
    if (!(nok_rate >= 0.0 && nok_rate < 1.0)) throw ParameterError("nok_rate must lie in [0, 1)");
    if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0)) {
        throw ParameterError("boundary_fraction must lie strictly inside (0, 1)");
    }
    const std::size_t b = boundary();
    if (b == 0 || b >= length) throw ParameterError("regime boundary must fall inside the series");
    if (!(noise_sigma >= 0.0) || !(phase_jitter >= 0.0) || !(amplitude_jitter >= 0.0)) {
        throw ParameterError("noise and jitter must be nonnegative");
    }
    if (!(a_freq1 > 0.0)) throw ParameterError("a_freq1 must be positive");
}

std::size_t GeneratorConfig::boundary() const {
    return static_cast<std::size_t>(std::floor(boundary_fraction * static_cast<double>(length)));
}

std::size_t GeneratorConfig::nok_count() const {
    // Slack absorbs binary rounding of the product (5000 * 0.0068).
    const double raw = nok_rate * static_cast<double>(size);
    return std::min(size, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

void to_json(json& j, const GeneratorConfig& c) {
    j = json{{"length", c.length},
             {"size", c.size},
             {"nok_rate", c.nok_rate},
             {"boundary_fraction", c.boundary_fraction},
             {"a_freq1", c.a_freq1},
             {"a_freq2", c.a_freq2},
             {"a_amp1", c.a_amp1},
             {"a_amp2", c.a_amp2},
             {"b_freq", c.b_freq},
             {"b_amp", c.b_amp},
             {"b_offset", c.b_offset},
             {"noise_sigma", c.noise_sigma},
             {"phase_jitter", c.phase_jitter},
             {"amplitude_jitter", c.amplitude_jitter},
             {"seed", c.seed}};
}

void from_json(const json& j, GeneratorConfig& c) {
    reject_unknown_keys(j, "generator",
                        {"length", "size", "nok_rate", "boundary_fraction", "a_freq1", "a_freq2",
                         "a_amp1", "a_amp2", "b_freq", "b_amp", "b_offset", "noise_sigma",
                         "phase_jitter", "amplitude_jitter", "seed"});
    read_opt(j, "length", c.length);
    read_opt(j, "size", c.size);
    read_opt(j, "nok_rate", c.nok_rate);
    read_opt(j, "boundary_fraction", c.boundary_fraction);
    read_opt(j, "a_freq1", c.a_freq1);
    read_opt(j, "a_freq2", c.a_freq2);
    read_opt(j, "a_amp1", c.a_amp1);
    read_opt(j, "a_amp2", c.a_amp2);
    read_opt(j, "b_freq", c.b_freq);
    read_opt(j, "b_amp", c.b_amp);
    read_opt(j, "b_offset", c.b_offset);
    read_opt(j, "noise_sigma", c.noise_sigma);
    read_opt(j, "phase_jitter", c.phase_jitter);
    read_opt(j, "amplitude_jitter", c.amplitude_jitter);
    read_opt(j, "seed", c.seed);
}

const char* to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::pattern_disruption: return "pattern_disruption";
        case AnomalyKind::regime_missing: return "regime_missing";
        case AnomalyKind::amplitude_shift: return "amplitude_shift";
    }
    return "?";
}

AnomalyKind parse_anomaly_kind(const std::string& name) {
    for (auto k : {AnomalyKind::pattern_disruption, AnomalyKind::regime_missing,
                   AnomalyKind::amplitude_shift}) {
        if (name == to_string(k)) return k;
    }
    throw ParameterError("unknown anomaly kind '" + name + "'");
}

void to_json(json& j, const AnomalySpec& s) {
    j = json{{"kind", to_string(s.kind)},
             {"begin", s.begin},
             {"end", s.end},
             {"magnitude", s.magnitude}};
    if (s.kind == AnomalyKind::regime_missing) j["source_offset"] = s.source_offset;
}

TimeSeries generate_normal(const GeneratorConfig& config, std::uint64_t instance_seed) {
    config.validate();
    Rng rng(instance_seed);
    const double phase = rng.uniform(-config.phase_jitter, config.phase_jitter);
    const double gain = 1.0 + rng.uniform(-config.amplitude_jitter, config.amplitude_jitter);
    const std::size_t n = config.length;
    const std::size_t boundary = config.boundary();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    TimeSeries s;
    s.values.resize(n);
    s.label = Label::ok;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        double v = 0.0;
        if (i < boundary) {
            v = config.a_amp1 * std::sin(two_pi * config.a_freq1 * x + phase) +
                config.a_amp2 * std::sin(two_pi * config.a_freq2 * x + 3.0 * phase);
        } else {
            v = config.b_offset + config.b_amp * std::sin(two_pi * config.b_freq * x + phase);
        }
        s.values[i] = gain * v + (config.noise_sigma > 0.0 ? config.noise_sigma * rng.normal() : 0.0);
    }
    return s;
}

TimeSeries inject_anomaly(TimeSeries series, const AnomalySpec& spec) {
    const std::size_t n = series.length();
    if (spec.begin >= spec.end || spec.end > n) {
        throw ParameterError("anomaly window [" + std::to_string(spec.begin) + ", " +
                             std::to_string(spec.end) + ") does not fit a series of length " +
                             std::to_string(n));
    }
    if (!(spec.magnitude >= 0.0) || !std::isfinite(spec.magnitude)) {
        throw ParameterError("anomaly magnitude must be finite and nonnegative");
    }
    series.label = Label::nok;
    if (spec.magnitude == 0.0) return series;
    auto& v = series.values;
    const double m = spec.magnitude;
    switch (spec.kind) {
        case AnomalyKind::pattern_disruption: {
            const double mean = std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(spec.begin),
                                                v.begin() + static_cast<std::ptrdiff_t>(spec.end),
                                                0.0) /
                                static_cast<double>(spec.end - spec.begin);
            const double w = std::min(m, 1.0);
            for (std::size_t i = spec.begin; i < spec.end; ++i) v[i] = (1.0 - w) * v[i] + w * mean;
            break;
        }
        case AnomalyKind::regime_missing: {
            if (spec.source_offset == 0 || spec.source_offset > spec.begin) {
                throw ParameterError("regime_missing needs 0 < source_offset <= window begin");
            }
            const double w = std::min(m, 1.0);
            const std::vector<double> original = v;
            for (std::size_t i = spec.begin; i < spec.end; ++i) {
                v[i] = (1.0 - w) * v[i] + w * original[i - spec.source_offset];
            }
            break;
        }
        case AnomalyKind::amplitude_shift:
            for (std::size_t i = spec.begin; i < spec.end; ++i) v[i] += m;
            break;
    }
    return series;
}

double regime_a_period(const GeneratorConfig& config) {
    return static_cast<double>(config.length) / config.a_freq1;
}

AnomalySpec random_anomaly(const GeneratorConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = config.length;
    const std::size_t boundary = config.boundary();
    AnomalySpec s;
    const double pick = rng.uniform();
    if (pick < 0.4) {
        s.kind = AnomalyKind::pattern_disruption;
    } else if (pick < 0.7) {
        s.kind = AnomalyKind::amplitude_shift;
    } else {
        s.kind = AnomalyKind::regime_missing;
    }
    const std::size_t third = n - boundary;
    const std::size_t lo = n / 3;  // windows live in the final two-thirds
    switch (s.kind) {
        case AnomalyKind::pattern_disruption:
        case AnomalyKind::amplitude_shift: {
            const auto width = static_cast<std::size_t>(
                rng.uniform(static_cast<double>(n) / 16.0, static_cast<double>(n) / 6.0));
            s.begin = lo + static_cast<std::size_t>(rng.below(n - width - lo + 1));
            s.end = s.begin + width;
            s.magnitude = s.kind == AnomalyKind::pattern_disruption ? rng.uniform(0.7, 1.0)
                                                                    : rng.uniform(0.6, 1.2);
            break;
        }
        case AnomalyKind::regime_missing: {
            s.begin = boundary + static_cast<std::size_t>(rng.below(third / 3 + 1));
            s.end = n;
            const double period = regime_a_period(config);
            // Shift back by whole regime-A periods far enough to land before the boundary.
            const double needed = static_cast<double>(s.end - boundary);
            s.source_offset =
                static_cast<std::size_t>(std::llround(std::ceil(needed / period) * period));
            s.source_offset = std::min(s.source_offset, s.begin);
            s.magnitude = rng.uniform(0.6, 1.0);
            break;
        }
    }
    return s;
}

namespace {

std::string instance_id(std::size_t i) {
    std::string digits = std::to_string(i);
    return "s" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

}  // namespace

Corpus generate_corpus(const GeneratorConfig& config) {
    config.validate();
    Corpus c;
    c.config = config;
    c.data.resize(config.size);
    c.records.resize(config.size);
    std::vector<bool> nok(config.size, false);
    Rng picker(derive_seed(config.seed, 0x6e6f6b));
    for (auto i : picker.sample_without_replacement(config.size, config.nok_count())) nok[i] = true;

    parallel_for(config.size, [&](std::size_t i) {
        InstanceRecord rec;
        rec.id = instance_id(i);
        rec.seed = derive_seed(config.seed, i + 1);
        auto s = generate_normal(config, rec.seed);
        if (nok[i]) {
            rec.anomaly = random_anomaly(config, derive_seed(rec.seed, 1));
            s = inject_anomaly(std::move(s), *rec.anomaly);
        }
        s.id = rec.id;
        rec.label = *s.label;
        c.data[i] = std::move(s);
        c.records[i] = std::move(rec);
    });
    return c;
}

json Corpus::manifest() const {
    json instances = json::array();
    std::size_t n_nok = 0;
    for (const auto& r : records) {
        json item{{"id", r.id}, {"seed", r.seed}, {"label", static_cast<int>(r.label)}};
        if (r.anomaly) item["anomaly"] = *r.anomaly;
        if (r.label == Label::nok) ++n_nok;
        instances.push_back(std::move(item));
    }
    return json{{"generator", config},
                {"counts", {{"ok", records.size() - n_nok}, {"nok", n_nok}}},
                {"instances", std::move(instances)}};
}

}  // namespace aee
