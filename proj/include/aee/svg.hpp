#pragma once

#include <span>
#include <string>
#include <vector>

#include "aee/latent_anomaly.hpp"
#include "aee/quality.hpp"

namespace aee::svg {

/// Series in black over a red background whose intensity follows the
/// explanation, normalized to its own range.
std::string heatmap(std::span<const double> series, std::span<const double> importance,
                    const std::string& title);

/// One group per method with four boxes: OK noise, OK xai, NOK noise, NOK xai.
/// Noise boxes are green, xai boxes red. Whiskers stop at the fences clipped
/// to [0, 1].
std::string boxplot(const std::vector<QMSummary>& summaries, const std::string& title);

std::string scatter(const std::vector<ScatterPoint>& points, const std::vector<bool>& nok,
                    const std::string& title);

/// Original in black, reconstruction in red.
std::string reconstruction(std::span<const double> original,
                           std::span<const double> reconstructed, const std::string& title);

}  // namespace aee::svg
