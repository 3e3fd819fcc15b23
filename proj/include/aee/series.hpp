#pragma once

#include <optional>
#include <string>
#include <vector>

namespace aee {

enum class Label : int { ok = 0, nok = 1 };

/// Fixed-length univariate signal with an optional OK/NOK label.
struct TimeSeries {
    std::string id;
    std::vector<double> values;
    std::optional<Label> label;

    std::size_t length() const noexcept { return values.size(); }
    bool is_nok() const noexcept { return label == Label::nok; }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

using Dataset = std::vector<TimeSeries>;

/// Throws DataError when the dataset is empty or lengths differ.
std::size_t common_length(const Dataset& data);

}  // namespace aee
