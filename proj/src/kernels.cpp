#include "aee/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "aee/errors.hpp"

namespace aee {

namespace {

// Work below this many multiply-adds stays on the calling thread.
constexpr std::size_t kParallelThreshold = 1 << 15;

using Index = std::ptrdiff_t;

/// Range [lo, hi) of output positions o for which o*stride + offset is a
/// valid input index.
struct OutRange {
    std::size_t lo;
    std::size_t hi;
};

OutRange valid_outputs(const Conv1dGeometry& g, Index offset) {
    const auto stride = static_cast<Index>(g.stride);
    const auto len = static_cast<Index>(g.in_length);
    Index lo = 0;
    if (offset < 0) lo = (-offset + stride - 1) / stride;
    Index hi = (len - 1 - offset) < 0 ? 0 : (len - 1 - offset) / stride + 1;
    hi = std::min<Index>(hi, static_cast<Index>(g.out_length));
    if (hi < lo) hi = lo;
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

void check_conv_spans(const Conv1dGeometry& g, std::size_t in, std::size_t w, std::size_t b,
                      std::size_t out) {
    if (in != g.in_channels * g.in_length || w != g.out_channels * g.in_channels * g.kernel ||
        b != g.out_channels || out != g.out_channels * g.out_length) {
        throw DimensionError("conv1d buffers do not match geometry");
    }
}

double squared_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

/// Dot product with four independent partial sums; the fixed split keeps the
/// result reproducible while letting the compiler vectorize.
double dot_unrolled(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

Conv1dGeometry conv1d_geometry(std::size_t in_channels, std::size_t in_length,
                               std::size_t out_channels, std::size_t kernel, std::size_t stride,
                               Padding padding) {
    if (stride == 0) throw ParameterError("conv1d stride must be >= 1");
    if (kernel == 0) throw ParameterError("conv1d kernel size must be >= 1");
    if (in_channels == 0 || out_channels == 0 || in_length == 0) {
        throw DimensionError("conv1d requires nonempty input and at least one filter");
    }
    Conv1dGeometry g;
    g.in_channels = in_channels;
    g.in_length = in_length;
    g.out_channels = out_channels;
    g.kernel = kernel;
    g.stride = stride;
    if (padding == Padding::same) {
        g.out_length = (in_length + stride - 1) / stride;
        const std::size_t needed = (g.out_length - 1) * stride + kernel;
        g.pad_total = needed > in_length ? needed - in_length : 0;
        g.pad_left = g.pad_total / 2;
    } else {
        if (kernel > in_length) {
            throw DimensionError("conv1d kernel " + std::to_string(kernel) +
                                 " exceeds input length " + std::to_string(in_length));
        }
        g.out_length = (in_length - kernel) / stride + 1;
    }
    return g;
}

namespace kernels {

void conv1d_forward(const Conv1dGeometry& g, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output) {
    check_conv_spans(g, input.size(), weights.size(), bias.size(), output.size());
    const std::size_t work = g.out_channels * g.in_channels * g.kernel * g.out_length;
    const auto n_out = static_cast<Index>(g.out_channels);
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
    for (Index oc = 0; oc < n_out; ++oc) {
        double* row = output.data() + oc * g.out_length;
        std::fill(row, row + g.out_length, bias[oc]);
        for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
            const double* in = input.data() + ic * g.in_length;
            const double* w = weights.data() + (oc * g.in_channels + ic) * g.kernel;
            for (std::size_t k = 0; k < g.kernel; ++k) {
                const Index offset = static_cast<Index>(k) - static_cast<Index>(g.pad_left);
                const auto [lo, hi] = valid_outputs(g, offset);
                const double wk = w[k];
                if (g.stride == 1) {
                    const double* src = in + offset;
                    for (std::size_t o = lo; o < hi; ++o) row[o] += wk * src[o];
                } else {
                    for (std::size_t o = lo; o < hi; ++o) {
                        row[o] += wk * in[static_cast<Index>(o * g.stride) + offset];
                    }
                }
            }
        }
    }
}

void conv1d_backward(const Conv1dGeometry& g, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias) {
    check_conv_spans(g, input.size(), weights.size(), grad_bias.size(), grad_output.size());
    if (grad_input.size() != input.size() || grad_weights.size() != weights.size()) {
        throw DimensionError("conv1d gradient buffers do not match geometry");
    }
    const std::size_t work = g.out_channels * g.in_channels * g.kernel * g.out_length;
    const bool parallel = work > kParallelThreshold;
    const auto n_out = static_cast<Index>(g.out_channels);
    const auto n_in = static_cast<Index>(g.in_channels);

#pragma omp parallel for schedule(static) if (parallel)
    for (Index oc = 0; oc < n_out; ++oc) {
        const double* go = grad_output.data() + oc * g.out_length;
        double bsum = 0.0;
        for (std::size_t o = 0; o < g.out_length; ++o) bsum += go[o];
        grad_bias[oc] += bsum;
        for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
            const double* in = input.data() + ic * g.in_length;
            double* gw = grad_weights.data() + (oc * g.in_channels + ic) * g.kernel;
            for (std::size_t k = 0; k < g.kernel; ++k) {
                const Index offset = static_cast<Index>(k) - static_cast<Index>(g.pad_left);
                const auto [lo, hi] = valid_outputs(g, offset);
                double s = 0.0;
                if (g.stride == 1) {
                    s = dot_unrolled(go + lo, in + static_cast<Index>(lo) + offset, hi - lo);
                } else {
                    for (std::size_t o = lo; o < hi; ++o) {
                        s += go[o] * in[static_cast<Index>(o * g.stride) + offset];
                    }
                }
                gw[k] += s;
            }
        }
    }

#pragma omp parallel for schedule(static) if (parallel)
    for (Index ic = 0; ic < n_in; ++ic) {
        double* gi = grad_input.data() + ic * g.in_length;
        std::fill(gi, gi + g.in_length, 0.0);
        for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
            const double* go = grad_output.data() + oc * g.out_length;
            const double* w = weights.data() + (oc * g.in_channels + ic) * g.kernel;
            for (std::size_t k = 0; k < g.kernel; ++k) {
                const Index offset = static_cast<Index>(k) - static_cast<Index>(g.pad_left);
                const auto [lo, hi] = valid_outputs(g, offset);
                const double wk = w[k];
                if (g.stride == 1) {
                    double* dst = gi + offset;
                    for (std::size_t o = lo; o < hi; ++o) dst[o] += wk * go[o];
                } else {
                    for (std::size_t o = lo; o < hi; ++o) {
                        gi[static_cast<Index>(o * g.stride) + offset] += wk * go[o];
                    }
                }
            }
        }
    }
}

void dense_forward(std::size_t in, std::size_t out, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output) {
    if (input.size() != in || weights.size() != in * out || bias.size() != out ||
        output.size() != out) {
        throw DimensionError("dense buffers do not match layer size");
    }
    const auto n_out = static_cast<Index>(out);
#pragma omp parallel for schedule(static) if (in * out > kParallelThreshold)
    for (Index r = 0; r < n_out; ++r) {
        const double* w = weights.data() + r * in;
        double s = 0.0;
        for (std::size_t c = 0; c < in; ++c) s += w[c] * input[c];
        output[r] = s + bias[r];
    }
}

void dense_backward(std::size_t in, std::size_t out, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> grad_output,
                    std::span<double> grad_input, std::span<double> grad_weights,
                    std::span<double> grad_bias) {
    if (input.size() != in || weights.size() != in * out || grad_output.size() != out ||
        grad_input.size() != in || grad_weights.size() != in * out || grad_bias.size() != out) {
        throw DimensionError("dense gradient buffers do not match layer size");
    }
    const bool parallel = in * out > kParallelThreshold;
    const auto n_out = static_cast<Index>(out);
    const auto n_in = static_cast<Index>(in);
#pragma omp parallel for schedule(static) if (parallel)
    for (Index r = 0; r < n_out; ++r) {
        const double go = grad_output[r];
        grad_bias[r] += go;
        double* gw = grad_weights.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) gw[c] += go * input[c];
    }
#pragma omp parallel for schedule(static) if (parallel)
    for (Index c = 0; c < n_in; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < out; ++r) s += weights[r * in + c] * grad_output[r];
        grad_input[c] = s;
    }
}

std::vector<std::vector<std::size_t>> radius_neighbors(std::span<const double> points,
                                                       std::size_t dim, double eps) {
    if (dim == 0 || points.size() % dim != 0) throw DimensionError("points must be n x dim");
    const std::size_t n = points.size() / dim;
    const double eps2 = eps * eps;
    std::vector<std::vector<std::size_t>> result(n);
    const auto count = static_cast<Index>(n);
#pragma omp parallel for schedule(dynamic, 64) if (n * n * dim > kParallelThreshold)
    for (Index i = 0; i < count; ++i) {
        const double* p = points.data() + i * dim;
        auto& list = result[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (squared_distance(p, points.data() + j * dim, dim) <= eps2) list.push_back(j);
        }
    }
    return result;
}

std::vector<std::size_t> radius_counts(std::span<const double> points, std::size_t dim,
                                       double eps) {
    if (dim == 0 || points.size() % dim != 0) throw DimensionError("points must be n x dim");
    const std::size_t n = points.size() / dim;
    const double eps2 = eps * eps;
    std::vector<std::size_t> counts(n, 0);
    const auto count = static_cast<Index>(n);
#pragma omp parallel for schedule(dynamic, 64) if (n * n * dim > kParallelThreshold)
    for (Index i = 0; i < count; ++i) {
        const double* p = points.data() + i * dim;
        std::size_t c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            c += squared_distance(p, points.data() + j * dim, dim) <= eps2 ? 1 : 0;
        }
        counts[i] = c;
    }
    return counts;
}

std::vector<double> kth_neighbor_distances(std::span<const double> points, std::size_t dim,
                                           std::size_t k) {
    if (dim == 0 || points.size() % dim != 0) throw DimensionError("points must be n x dim");
    const std::size_t n = points.size() / dim;
    if (k == 0 || k >= n) {
        throw ParameterError("k must satisfy 1 <= k < number of points");
    }
    std::vector<double> result(n);
    const auto count = static_cast<Index>(n);
#pragma omp parallel if (n * n * dim > kParallelThreshold)
    {
        std::vector<double> dist(n - 1);
#pragma omp for schedule(dynamic, 64)
        for (Index i = 0; i < count; ++i) {
            const double* p = points.data() + i * dim;
            std::size_t m = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (static_cast<Index>(j) == i) continue;
                dist[m++] = squared_distance(p, points.data() + j * dim, dim);
            }
            std::nth_element(dist.begin(), dist.begin() + static_cast<Index>(k - 1), dist.end());
            result[i] = std::sqrt(dist[k - 1]);
        }
    }
    return result;
}

namespace serial {

void conv1d_forward(const Conv1dGeometry& g, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output) {
    check_conv_spans(g, input.size(), weights.size(), bias.size(), output.size());
    for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        for (std::size_t o = 0; o < g.out_length; ++o) {
            double s = bias[oc];
            for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
                for (std::size_t k = 0; k < g.kernel; ++k) {
                    const Index pos = static_cast<Index>(o * g.stride + k) -
                                      static_cast<Index>(g.pad_left);
                    if (pos < 0 || pos >= static_cast<Index>(g.in_length)) continue;
                    s += weights[(oc * g.in_channels + ic) * g.kernel + k] *
                         input[ic * g.in_length + static_cast<std::size_t>(pos)];
                }
            }
            output[oc * g.out_length + o] = s;
        }
    }
}

void conv1d_backward(const Conv1dGeometry& g, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias) {
    check_conv_spans(g, input.size(), weights.size(), grad_bias.size(), grad_output.size());
    const auto pad = static_cast<Index>(g.pad_left);
    const auto len = static_cast<Index>(g.in_length);
    std::vector<double> terms;
    for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        double bsum = 0.0;
        for (std::size_t o = 0; o < g.out_length; ++o) bsum += grad_output[oc * g.out_length + o];
        grad_bias[oc] += bsum;
        for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
            for (std::size_t k = 0; k < g.kernel; ++k) {
                // Collect the valid taps first so the sum can follow the same
                // four-way split the fast path uses for unit stride.
                terms.clear();
                for (std::size_t o = 0; o < g.out_length; ++o) {
                    const Index pos = static_cast<Index>(o * g.stride + k) - pad;
                    if (pos < 0 || pos >= len) continue;
                    terms.push_back(grad_output[oc * g.out_length + o] *
                                    input[ic * g.in_length + static_cast<std::size_t>(pos)]);
                }
                double s = 0.0;
                if (g.stride == 1) {
                    double part[4] = {0.0, 0.0, 0.0, 0.0};
                    const std::size_t blocks = terms.size() / 4 * 4;
                    for (std::size_t i = 0; i < terms.size(); ++i) {
                        part[i < blocks ? i % 4 : 0] += terms[i];
                    }
                    s = (part[0] + part[1]) + (part[2] + part[3]);
                } else {
                    for (double t : terms) s += t;
                }
                grad_weights[(oc * g.in_channels + ic) * g.kernel + k] += s;
            }
        }
    }
    for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
        for (Index pos = 0; pos < len; ++pos) {
            double s = 0.0;
            for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
                for (std::size_t k = 0; k < g.kernel; ++k) {
                    const Index shifted = pos + pad - static_cast<Index>(k);
                    if (shifted < 0 || shifted % static_cast<Index>(g.stride) != 0) continue;
                    const auto o = static_cast<std::size_t>(shifted) / g.stride;
                    if (o >= g.out_length) continue;
                    s += weights[(oc * g.in_channels + ic) * g.kernel + k] *
                         grad_output[oc * g.out_length + o];
                }
            }
            grad_input[ic * g.in_length + static_cast<std::size_t>(pos)] = s;
        }
    }
}

void dense_forward(std::size_t in, std::size_t out, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output) {
    for (std::size_t r = 0; r < out; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < in; ++c) s += weights[r * in + c] * input[c];
        output[r] = s + bias[r];
    }
}

std::vector<std::vector<std::size_t>> radius_neighbors(std::span<const double> points,
                                                       std::size_t dim, double eps) {
    const std::size_t n = points.size() / dim;
    std::vector<std::vector<std::size_t>> result(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (squared_distance(points.data() + i * dim, points.data() + j * dim, dim) <=
                eps * eps) {
                result[i].push_back(j);
            }
        }
    }
    return result;
}

std::vector<std::size_t> radius_counts(std::span<const double> points, std::size_t dim,
                                       double eps) {
    const auto lists = radius_neighbors(points, dim, eps);
    std::vector<std::size_t> counts;
    for (const auto& l : lists) counts.push_back(l.size());
    return counts;
}

std::vector<double> kth_neighbor_distances(std::span<const double> points, std::size_t dim,
                                           std::size_t k) {
    const std::size_t n = points.size() / dim;
    if (k == 0 || k >= n) throw ParameterError("k must satisfy 1 <= k < number of points");
    std::vector<double> result(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> dist;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                dist.push_back(
                    std::sqrt(squared_distance(points.data() + i * dim, points.data() + j * dim, dim)));
            }
        }
        std::sort(dist.begin(), dist.end());
        result[i] = dist[k - 1];
    }
    return result;
}

}  // namespace serial
}  // namespace kernels
}  // namespace aee
