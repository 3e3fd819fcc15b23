#pragma once

// Hot loops of the library. Every kernel has an OpenMP version (namespace
// aee::kernels) and a plain serial version (aee::kernels::serial) kept as the
// reference the tests and the benchmark compare against. Each output element
// is produced by exactly one thread with a fixed summation order, so results
// do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace aee {

enum class Padding { same, valid };

struct Conv1dGeometry {
    std::size_t in_channels = 0;
    std::size_t in_length = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    std::size_t pad_left = 0;
    std::size_t pad_total = 0;
    std::size_t out_length = 0;
};

/// Output length is floor((L_in + pad - K) / stride) + 1. `same` pads so
/// that out_length == ceil(L_in / stride), extra padding going right.
Conv1dGeometry conv1d_geometry(std::size_t in_channels, std::size_t in_length,
                               std::size_t out_channels, std::size_t kernel,
                               std::size_t stride, Padding padding);

namespace kernels {

/// weights are [out_channels x in_channels x kernel].
void conv1d_forward(const Conv1dGeometry& g, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output);

/// Overwrites grad_input; accumulates into grad_weights and grad_bias.
void conv1d_backward(const Conv1dGeometry& g, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias);

/// weights are [out x in], output = W x + b.
void dense_forward(std::size_t in, std::size_t out, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output);

void dense_backward(std::size_t in, std::size_t out, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> grad_output,
                    std::span<double> grad_input, std::span<double> grad_weights,
                    std::span<double> grad_bias);

/// Points are row-major [n x dim]. Returns, for each point, the ascending
/// indices of all points (itself included) within Euclidean distance eps.
std::vector<std::vector<std::size_t>> radius_neighbors(std::span<const double> points,
                                                       std::size_t dim, double eps);

/// Number of points (itself included) within eps of each point.
std::vector<std::size_t> radius_counts(std::span<const double> points, std::size_t dim,
                                       double eps);

/// Distance from each point to its k-th nearest other point.
std::vector<double> kth_neighbor_distances(std::span<const double> points, std::size_t dim,
                                           std::size_t k);

namespace serial {

void conv1d_forward(const Conv1dGeometry& g, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output);
void conv1d_backward(const Conv1dGeometry& g, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias);
void dense_forward(std::size_t in, std::size_t out, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output);
std::vector<std::vector<std::size_t>> radius_neighbors(std::span<const double> points,
                                                       std::size_t dim, double eps);
std::vector<std::size_t> radius_counts(std::span<const double> points, std::size_t dim,
                                       double eps);
std::vector<double> kth_neighbor_distances(std::span<const double> points, std::size_t dim,
                                           std::size_t k);

}  // namespace serial
}  // namespace kernels
}  // namespace aee
