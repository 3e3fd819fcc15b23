#include "aee/latent_anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>

#include "aee/errors.hpp"
#include "aee/kernels.hpp"
#include "aee/parallel.hpp"

namespace aee {

namespace {

constexpr int kUnvisited = -2;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
}

void check_points(const PointSet& points) {
    if (points.dim == 0 || points.values.size() % points.dim != 0) {
        throw DimensionError("point set values are not a multiple of its dimension");
    }
    for (double v : points.values) {
        if (!std::isfinite(v)) throw DataError("point set contains a non-finite coordinate");
    }
}

}  // namespace

ClusterAssignment dbscan(const PointSet& points, double eps, std::size_t min_pts) {
    if (!(eps > 0.0)) throw ParameterError("DBSCAN eps must be positive");
    if (min_pts < 1) throw ParameterError("DBSCAN min_pts must be >= 1");
    ClusterAssignment out;
    if (points.size() == 0) return out;
    check_points(points);

    const std::size_t n = points.size();
    const double eps2 = eps * eps;
    const auto counts = kernels::radius_counts(points.values, points.dim, eps);
    out.is_core.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.is_core[i] = counts[i] >= min_pts;
    out.labels.assign(n, kUnvisited);

    int cluster = 0;
    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.labels[i] != kUnvisited) continue;
        if (!out.is_core[i]) {
            out.labels[i] = ClusterAssignment::kOutlier;
            continue;
        }
        out.labels[i] = cluster;
        frontier.assign(1, i);
        while (!frontier.empty()) {
            const std::size_t p = frontier.front();
            frontier.pop_front();
            // Only core points extend the cluster.
            if (!out.is_core[p]) continue;
            for (std::size_t q = 0; q < n; ++q) {
                if (squared_distance(points.point(p), points.point(q)) > eps2) continue;
                const int lq = out.labels[q];
                if (lq == kUnvisited) {
                    out.labels[q] = cluster;
                    frontier.push_back(q);
                } else if (lq == ClusterAssignment::kOutlier) {
                    out.labels[q] = cluster;  // border point found after it was scanned
                }
            }
        }
        ++cluster;
    }
    out.cluster_count = cluster;
    return out;
}

std::vector<double> k_distance_profile(const PointSet& points, std::size_t k) {
    check_points(points);
    if (k == 0 || k >= points.size()) {
        throw ParameterError("k must satisfy 1 <= k < number of points (k=" + std::to_string(k) +
                             ", n=" + std::to_string(points.size()) + ")");
    }
    auto d = kernels::kth_neighbor_distances(points.values, points.dim, k);
    std::sort(d.begin(), d.end());
    return d;
}

namespace {

struct Knee {
    std::size_t index;
    double depth;  // normalized distance below the chord, 0 for a straight line
};

// Point farthest below the chord from first to last value.
Knee chord_knee(std::span<const double> profile) {
    const std::size_t n = profile.size();
    const double lo = profile.front();
    const double hi = profile.back();
    if (n <= 2 || !(hi > lo)) return {n - 1, 0.0};
    Knee best{n - 1, -1.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        const double y = (profile[i] - lo) / (hi - lo);
        if (x - y > best.depth) best = {i, x - y};
    }
    return best;
}

// A tail bend shallower than this is treated as a straight run of outliers.
constexpr double kMinTailDepth = 0.25;

}  // namespace

double elbow_eps(std::span<const double> profile) {
    if (profile.empty()) throw ParameterError("empty k-distance profile");
    // A heavy outlier tail squashes the body of the curve, so the first knee
    // lands inside the dense region. Refine once on the tail beyond it.
    std::size_t knee = chord_knee(profile).index;
    if (profile.size() - knee > 2) {
        const Knee tail = chord_knee(profile.subspan(knee));
        if (tail.depth >= kMinTailDepth) knee += tail.index;
    }
    const double eps = profile[knee];
    // Coincident points still need a positive radius.
    return eps > 0.0 ? eps : 1e-12;
}

PointSet encode_all(const AEModel& model, const Dataset& data) {
    PointSet p;
    p.dim = model.latent_dim();
    p.values.resize(data.size() * p.dim);
    parallel_for(data.size(), [&](std::size_t i) {
        const auto z = encode(model, data[i].values);
        std::copy(z.begin(), z.end(), p.values.begin() + static_cast<std::ptrdiff_t>(i * p.dim));
    });
    return p;
}

Detection detect_latents(PointSet latents, const DetectionConfig& config) {
    Detection det;
    if (latents.size() == 0) {
        det.latents = std::move(latents);
        return det;
    }
    check_points(latents);
    if (config.standardize) {
        const std::size_t n = latents.size();
        for (std::size_t d = 0; d < latents.dim; ++d) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += latents.values[i * latents.dim + d];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = latents.values[i * latents.dim + d] - mean;
                var += c * c;
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            for (std::size_t i = 0; i < n; ++i) {
                double& v = latents.values[i * latents.dim + d];
                v = sd > 0.0 ? (v - mean) / sd : 0.0;
            }
        }
    }
    if (config.eps) {
        det.eps = *config.eps;
    } else if (latents.size() > config.min_pts) {
        det.eps = elbow_eps(k_distance_profile(latents, config.min_pts));
    } else {
        throw ParameterError("too few points to choose eps automatically; set eps explicitly");
    }
    det.clusters = dbscan(latents, det.eps, config.min_pts);
    det.flags.resize(latents.size());
    for (std::size_t i = 0; i < latents.size(); ++i) det.flags[i] = det.clusters.is_outlier(i);
    det.latents = std::move(latents);
    return det;
}

Detection detect(const AEModel& model, const Dataset& data, const DetectionConfig& config) {
    if (!data.empty()) common_length(data);
    return detect_latents(encode_all(model, data), config);
}

DetectionReport score(const std::vector<bool>& flags, const std::vector<Label>& labels) {
    if (flags.size() != labels.size()) {
        throw DimensionError("score: " + std::to_string(flags.size()) + " flags for " +
                             std::to_string(labels.size()) + " labels");
    }
    DetectionReport r;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        const bool nok = labels[i] == Label::nok;
        if (flags[i]) {
            (nok ? r.true_positive : r.false_positive)++;
        } else {
            (nok ? r.false_negative : r.true_negative)++;
        }
    }
    auto fill = [](ClassMetrics& m, std::size_t tp, std::size_t fp, std::size_t fn) {
        m.support = tp + fn;
        if (tp + fp > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        } else {
            m.degenerate = true;
        }
        if (tp + fn > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        } else {
            m.degenerate = true;
        }
        if (m.precision + m.recall > 0.0) {
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        } else {
            m.degenerate = true;
        }
    };
    fill(r.nok, r.true_positive, r.false_positive, r.false_negative);
    fill(r.ok, r.true_negative, r.false_negative, r.false_positive);
    return r;
}

void to_json(nlohmann::json& j, const DetectionReport& r) {
    auto cls = [](const ClassMetrics& m) {
        return nlohmann::json{{"precision", m.precision},
                              {"recall", m.recall},
                              {"f1-score", m.f1},
                              {"support", m.support},
                              {"degenerate", m.degenerate}};
    };
    j = nlohmann::json{{"0 (OK)", cls(r.ok)},
                       {"1 (NOK)", cls(r.nok)},
                       {"confusion",
                        {{"true_positive", r.true_positive},
                         {"false_positive", r.false_positive},
                         {"true_negative", r.true_negative},
                         {"false_negative", r.false_negative}}}};
}

const char* to_string(ScatterTag tag) {
    switch (tag) {
        case ScatterTag::ok: return "ok";
        case ScatterTag::ok_deviating: return "ok_deviating";
        case ScatterTag::outlier: return "outlier";
    }
    return "?";
}

std::vector<std::pair<double, double>> pca_2d(const PointSet& points) {
    const std::size_t n = points.size();
    std::vector<std::pair<double, double>> out(n);
    if (n == 0) return out;
    check_points(points);
    const auto dim = static_cast<Eigen::Index>(points.dim);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index d = 0; d < dim; ++d) {
            x(static_cast<Eigen::Index>(i), d) = points.values[i * points.dim + static_cast<std::size_t>(d)];
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigen orders eigenvalues ascending; take the top two.
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(dim, 2);
    for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, dim); ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(dim - 1 - c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        basis.col(c) = v;
    }
    const Eigen::MatrixXd proj = x * basis;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {proj(static_cast<Eigen::Index>(i), 0), proj(static_cast<Eigen::Index>(i), 1)};
    }
    return out;
}

std::vector<ScatterPoint> latent_scatter(const Detection& detection) {
    const auto xy = pca_2d(detection.latents);
    std::vector<ScatterPoint> out(xy.size());
    for (std::size_t i = 0; i < xy.size(); ++i) {
        out[i].x = xy[i].first;
        out[i].y = xy[i].second;
        if (detection.clusters.is_outlier(i)) {
            out[i].tag = ScatterTag::outlier;
        } else if (!detection.clusters.is_core[i]) {
            out[i].tag = ScatterTag::ok_deviating;
        } else {
            out[i].tag = ScatterTag::ok;
        }
    }
    return out;
}

}  // namespace aee
