#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aee {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major f64 tensor. Feature maps are [channels x length]; the
/// latent vector and dense activations are rank 1.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    Tensor(Shape s, std::vector<double> values);

    static Tensor vector(std::vector<double> values);
    static Tensor series(std::span<const double> values);  // 1 x N

    std::size_t size() const noexcept { return data.size(); }
    std::size_t rank() const noexcept { return shape.size(); }
    /// For rank-2 tensors; rank-1 tensors count as a single channel.
    std::size_t channels() const noexcept { return shape.size() == 2 ? shape[0] : 1; }
    std::size_t length() const noexcept { return shape.empty() ? 0 : shape.back(); }

    double& operator()(std::size_t c, std::size_t i) { return data[c * length() + i]; }
    double operator()(std::size_t c, std::size_t i) const { return data[c * length() + i]; }

    std::span<double> row(std::size_t c) { return {data.data() + c * length(), length()}; }
    std::span<const double> row(std::size_t c) const {
        return {data.data() + c * length(), length()};
    }

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Throws DimensionError unless `actual` equals `expected`.
void require_shape(const Tensor& t, const Shape& expected, const char* what);

}  // namespace aee
