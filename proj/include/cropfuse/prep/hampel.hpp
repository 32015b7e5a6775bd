#pragma once

#include <span>
#include <vector>

#include "cropfuse/prep/series.hpp"

namespace cropfuse::prep {

struct HampelOptions {
    int half_window_days = 10;
    double k = 3.0;
};

/// Flags outliers by the sliding median/MAD rule over samples within
/// +-half_window_days. A sample is flagged when |x - m| > k * 1.4826 * MAD;
/// when the window's MAD is exactly zero, any sample differing from the
/// median is flagged. Missing (NaN) samples are never flagged.
/// Throws InsufficientData("empty series") if all values are missing.
std::vector<bool> hampel_filter(std::span<const double> values, std::span<const int> days,
                                const HampelOptions& options = {});

/// Sets all four signals to missing on every date flagged in either mask.
RawSeries apply_outlier_mask(const RawSeries& raw, const std::vector<bool>& mask_b4,
                             const std::vector<bool>& mask_b8a);

}  // namespace cropfuse::prep
