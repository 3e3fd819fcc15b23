#include <cmath>

#include "aee/errors.hpp"
#include "aee/explainers.hpp"

namespace aee {

const char* to_string(Method m) {
    switch (m) {
        case Method::gradcam: return "gradcam";
        case Method::lime: return "lime";
        case Method::shap: return "shap";
        case Method::lrp: return "lrp";
        case Method::aee: return "aee";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (auto m : {Method::gradcam, Method::lime, Method::shap, Method::lrp, Method::aee}) {
        if (name == to_string(m)) return m;
    }
    throw ParameterError("unknown explanation method '" + name + "'");
}

std::string Target::name() const {
    return combined ? "combined" : "latent" + std::to_string(index);
}

Target parse_target(const std::string& name) {
    if (name == "combined") return Target::all();
    const std::string prefix = "latent";
    if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size()) {
        try {
            return Target::latent(std::stoul(name.substr(prefix.size())));
        } catch (const std::exception&) {
        }
    }
    throw ParameterError("target must be 'combined' or 'latent<i>', got '" + name + "'");
}

SegmentationScheme SegmentationScheme::equal_width(std::size_t length, std::size_t m) {
    if (m == 0 || m > length) {
        throw ParameterError("cannot split " + std::to_string(length) + " points into " +
                             std::to_string(m) + " nonempty segments");
    }
    SegmentationScheme s;
    const std::size_t base = length / m;
    const std::size_t extra = length % m;
    std::size_t start = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t width = base + (i < extra ? 1 : 0);
        s.segments.emplace_back(start, start + width);
        start += width;
    }
    return s;
}

void SegmentationScheme::validate(std::size_t length) const {
    std::size_t expected = 0;
    for (const auto& [b, e] : segments) {
        if (b != expected || e <= b) {
            throw ParameterError("segments must be contiguous, disjoint and nonempty");
        }
        expected = e;
    }
    if (expected != length) throw ParameterError("segments do not cover the series");
}

std::vector<double> apply_mask(std::span<const double> series, const SegmentationScheme& scheme,
                               const std::vector<bool>& mask) {
    if (mask.size() != scheme.count()) {
        throw DimensionError("mask has " + std::to_string(mask.size()) + " entries for " +
                             std::to_string(scheme.count()) + " segments");
    }
    std::vector<double> out(series.begin(), series.end());
    for (std::size_t s = 0; s < mask.size(); ++s) {
        if (mask[s]) continue;
        const auto [b, e] = scheme.segments[s];
        const std::size_t last = e - 1;
        if (last == b) continue;
        const double first_value = series[b];
        const double slope = (series[last] - first_value) / static_cast<double>(last - b);
        for (std::size_t i = b; i <= last; ++i) {
            out[i] = first_value + slope * static_cast<double>(i - b);
        }
    }
    return out;
}

std::vector<double> broadcast_segments(const SegmentationScheme& scheme,
                                       std::span<const double> per_segment) {
    if (per_segment.size() != scheme.count()) {
        throw DimensionError("one value per segment is required");
    }
    std::vector<double> out(scheme.segments.empty() ? 0 : scheme.segments.back().second);
    for (std::size_t s = 0; s < scheme.count(); ++s) {
        for (std::size_t i = scheme.segments[s].first; i < scheme.segments[s].second; ++i) {
            out[i] = per_segment[s];
        }
    }
    return out;
}

std::vector<double> combine_abs_mean(const std::vector<std::vector<double>>& maps) {
    if (maps.empty()) throw ParameterError("nothing to combine");
    std::vector<double> out(maps.front().size(), 0.0);
    for (const auto& m : maps) {
        if (m.size() != out.size()) throw DimensionError("per-latent maps differ in length");
        for (std::size_t i = 0; i < m.size(); ++i) out[i] += std::abs(m[i]);
    }
    for (double& v : out) v /= static_cast<double>(maps.size());
    return out;
}

}  // namespace aee
