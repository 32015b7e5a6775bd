#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cropfuse/core/dataset.hpp"

namespace cropfuse::prep {

/// Too few usable observations to process a signal.
class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Points on the 2-day season grid: days 0, 2, ..., 364.
inline constexpr std::size_t kGridPoints = 183;
inline constexpr int kGridStepDays = 2;

/// Irregular observations of one parcel-season. Missing values are NaN.
struct RawSeries {
    std::vector<int> days;  // strictly ascending season-day offsets
    std::array<std::vector<double>, kNumSignals> values;

    std::size_t size() const { return days.size(); }
    /// Checks ordering, lengths and the physical ranges of every signal.
    void validate() const;
};

/// Gap-free smoothed signals on the 2-day grid.
struct SmoothSeries {
    std::array<std::array<double, kGridPoints>, kNumSignals> values{};
};

/// Collects the parcel's samples that fall in `season_year`.
RawSeries extract_season(const Dataset& dataset, std::size_t parcel, int season_year);

}  // namespace cropfuse::prep
