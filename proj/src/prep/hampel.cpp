#include "cropfuse/prep/hampel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cropfuse::prep {

namespace {
// Median of a scratch buffer (reordered in place).
double median_of(std::vector<double>& v) {
    const auto n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

constexpr double kMadScale = 1.4826;
}  // namespace

std::vector<bool> hampel_filter(std::span<const double> values, std::span<const int> days,
                                const HampelOptions& options) {
    if (values.size() != days.size()) throw std::invalid_argument("hampel_filter: length mismatch");
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isnan(values[i])) present.push_back(i);
    }
    if (present.empty()) throw InsufficientData("empty series");

    std::vector<bool> mask(values.size(), false);
    std::vector<double> window, deviations;
    std::size_t lo = 0, hi = 0;  // window [lo, hi) over `present`
    for (std::size_t p = 0; p < present.size(); ++p) {
        const int day = days[present[p]];
        while (days[present[lo]] < day - options.half_window_days) ++lo;
        while (hi < present.size() && days[present[hi]] <= day + options.half_window_days) ++hi;

        window.clear();
        for (std::size_t q = lo; q < hi; ++q) window.push_back(values[present[q]]);
        const double m = median_of(window);
        deviations.clear();
        for (std::size_t q = lo; q < hi; ++q) deviations.push_back(std::abs(values[present[q]] - m));
        const double mad = median_of(deviations);

        const double dev = std::abs(values[present[p]] - m);
        mask[present[p]] = mad > 0.0 ? dev > options.k * kMadScale * mad : dev > 0.0;
    }
    return mask;
}

RawSeries apply_outlier_mask(const RawSeries& raw, const std::vector<bool>& mask_b4,
                             const std::vector<bool>& mask_b8a) {
    RawSeries out = raw;
    const auto flagged = [](const std::vector<bool>& m, std::size_t i) { return i < m.size() && m[i]; };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (flagged(mask_b4, i) || flagged(mask_b8a, i)) {
            for (auto& v : out.values) v[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

}  // namespace cropfuse::prep
