#include "aee/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "aee/errors.hpp"

namespace aee {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (shape_size(shape) != data.size()) {
        throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                             std::to_string(data.size()) + " values");
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::series(std::span<const double> values) {
    return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

bool Tensor::all_finite() const noexcept {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
    if (t.shape != expected) {
        throw DimensionError(std::string(what) + ": expected shape " + shape_string(expected) +
                             ", got " + shape_string(t.shape));
    }
}

}  // namespace aee
