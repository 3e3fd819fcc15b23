#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aee/series.hpp"

namespace aee {

/// Two-regime periodic signal: regime A on [0, boundary), regime B after.
/// Frequencies are in cycles per series length.
struct GeneratorConfig {
    std::size_t length = 1024;
    std::size_t size = 5000;
    double nok_rate = 0.0068;
    double boundary_fraction = 2.0 / 3.0;
    double a_freq1 = 9.0;
    double a_freq2 = 27.0;
    double a_amp1 = 1.0;
    double a_amp2 = 0.5;
    double b_freq = 60.0;
    double b_amp = 0.4;
    double b_offset = 0.5;
    double noise_sigma = 0.05;
    double phase_jitter = 0.05;      // radians, uniform +-
    double amplitude_jitter = 0.02;  // relative, uniform +-
    std::uint64_t seed = 7;

    void validate() const;
    std::size_t boundary() const;
    std::size_t nok_count() const;

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

enum class AnomalyKind { pattern_disruption, regime_missing, amplitude_shift };
const char* to_string(AnomalyKind k);
AnomalyKind parse_anomaly_kind(const std::string& name);

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::pattern_disruption;
    std::size_t begin = 0;  // window [begin, end)
    std::size_t end = 0;
    double magnitude = 1.0;
    // regime_missing copies values from `source_offset` points earlier.
    std::size_t source_offset = 0;

    friend bool operator==(const AnomalySpec&, const AnomalySpec&) = default;
};

void to_json(nlohmann::json& j, const AnomalySpec& s);

/// OK series for one instance seed.
TimeSeries generate_normal(const GeneratorConfig& config, std::uint64_t instance_seed);

/// Applies `spec` inside its window only and marks the series NOK.
///   pattern_disruption: blends the window toward its own mean
///   regime_missing:     blends toward the values source_offset points earlier
///   amplitude_shift:    adds magnitude to the window
TimeSeries inject_anomaly(TimeSeries series, const AnomalySpec& spec);

/// Regime A fundamental period in points.
double regime_a_period(const GeneratorConfig& config);

struct InstanceRecord {
    std::string id;
    std::uint64_t seed = 0;
    Label label = Label::ok;
    std::optional<AnomalySpec> anomaly;
};

struct Corpus {
    Dataset data;
    std::vector<InstanceRecord> records;
    GeneratorConfig config;

    nlohmann::json manifest() const;
};

/// Randomized anomaly for instance `index` (pure function of its seed).
AnomalySpec random_anomaly(const GeneratorConfig& config, std::uint64_t seed);

Corpus generate_corpus(const GeneratorConfig& config);

}  // namespace aee
