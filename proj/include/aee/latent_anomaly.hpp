#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aee/autoencoder.hpp"

namespace aee {

/// Row-major [n x dim] point set.
struct PointSet {
    std::size_t dim = 0;
    std::vector<double> values;

    std::size_t size() const noexcept { return dim ? values.size() / dim : 0; }
    std::span<const double> point(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

struct ClusterAssignment {
    static constexpr int kOutlier = -1;

    std::vector<int> labels;    // cluster id from 0, or kOutlier
    std::vector<bool> is_core;
    int cluster_count = 0;

    bool is_outlier(std::size_t i) const { return labels[i] == kOutlier; }
};

/// Euclidean DBSCAN. A point is core when at least `min_pts` points (itself
/// included) lie within `eps`. Points are scanned in index order; a border
/// point joins the first cluster that reaches it.
ClusterAssignment dbscan(const PointSet& points, double eps, std::size_t min_pts);

/// Ascending distances from every point to its k-th nearest other point.
std::vector<double> k_distance_profile(const PointSet& points, std::size_t k);

/// Knee of a sorted k-distance profile: the value whose point lies farthest
/// below the chord from the first to the last entry. When the tail past that
/// knee bends sharply again, the knee is moved to the tail's own knee.
double elbow_eps(std::span<const double> sorted_profile);

struct DetectionConfig {
    std::optional<double> eps;  // chosen from the k-distance elbow when unset
    std::size_t min_pts = 5;
    bool standardize = false;  // z-score latent dimensions before clustering

    friend bool operator==(const DetectionConfig&, const DetectionConfig&) = default;
};

struct Detection {
    PointSet latents;          // as clustered (after optional standardization)
    ClusterAssignment clusters;
    std::vector<bool> flags;   // true = outlier
    double eps = 0.0;
};

PointSet encode_all(const AEModel& model, const Dataset& data);

/// Flags every series whose latent code DBSCAN labels as noise.
Detection detect(const AEModel& model, const Dataset& data, const DetectionConfig& config);
Detection detect_latents(PointSet latents, const DetectionConfig& config);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool degenerate = false;  // a zero denominator was reported as 0
};

struct DetectionReport {
    ClassMetrics ok;   // class 0
    ClassMetrics nok;  // class 1 (flagged = predicted NOK)
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t true_negative = 0;
    std::size_t false_negative = 0;
};

DetectionReport score(const std::vector<bool>& flags, const std::vector<Label>& labels);
void to_json(nlohmann::json& j, const DetectionReport& r);

enum class ScatterTag { ok, ok_deviating, outlier };
const char* to_string(ScatterTag tag);

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    ScatterTag tag = ScatterTag::ok;
};

/// Principal-component projection of `points` onto two dimensions
/// (components ordered by decreasing variance; sign fixed so each
/// component's largest-magnitude loading is positive).
std::vector<std::pair<double, double>> pca_2d(const PointSet& points);

/// Tags: outlier = DBSCAN noise, ok_deviating = border point of a cluster,
/// ok = core point.
std::vector<ScatterPoint> latent_scatter(const Detection& detection);

}  // namespace aee
