#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cropfuse/prep/pipeline.hpp"

namespace cropfuse::features {

inline constexpr std::size_t kNumWindows = 25;
inline constexpr int kWindowDays = 30;
inline constexpr int kWindowStepDays = 15;
inline constexpr std::size_t kNumFunctionals = 7;  // mean, std, q1, median, q3, min, max
inline constexpr std::size_t kFeaturesPerWindow = kNumFunctionals * kNumSignals;  // 28
inline constexpr std::size_t kFeatureLength = kNumWindows * kFeaturesPerWindow;    // 700

/// 25 x 28 windowed functionals, row-major by window. Within a window the
/// layout is signal-major (B4, B8A, LAI, FAPAR), each followed by its 7
/// functionals.
struct SeasonFeatures {
    std::array<float, kFeatureLength> values{};

    float at(std::size_t window, std::size_t feature) const { return values[window * kFeaturesPerWindow + feature]; }
    std::span<const float, kFeaturesPerWindow> window(std::size_t w) const {
        return std::span<const float, kFeaturesPerWindow>(values.data() + w * kFeaturesPerWindow, kFeaturesPerWindow);
    }
    bool is_zero() const;
};

struct WindowSlice {
    int start_day = 0;
    int end_day = 0;           // exclusive, clipped to the season length
    std::size_t first = 0;     // first grid index
    std::size_t last = 0;      // last grid index (inclusive)
    std::size_t count() const { return last - first + 1; }
};

/// Window i covers days [15 i, 15 i + 30) clipped to the season.
std::array<WindowSlice, kNumWindows> window_slices(int season_len_days = 365);

/// mean, population std, q1, median, q3 (linear interpolation at
/// q (n - 1)), min, max. Throws std::invalid_argument on an empty window.
std::array<double, kNumFunctionals> functionals(std::span<const double> values);

SeasonFeatures season_features(const prep::SmoothSeries& smooth);

/// Zeroes every window starting on or after `cutoff_day`; windows that
/// straddle the cutoff are kept.
SeasonFeatures truncate_at(const SeasonFeatures& features, int cutoff_day);

/// Cutoffs used for in-season augmentation: 165, 180, ..., 360, 365.
std::vector<int> augment_cutoffs();
int draw_augment_cutoff(std::mt19937_64& rng);
SeasonFeatures augment_crop(const SeasonFeatures& features, std::mt19937_64& rng);

using FeaturePtr = std::shared_ptr<const SeasonFeatures>;

/// Features per (parcel index, season year).
class FeatureTable {
public:
    void insert(std::size_t parcel, int season, FeaturePtr features);
    FeaturePtr find(std::size_t parcel, int season) const;
    std::size_t size() const { return table_.size(); }
    const std::map<std::pair<std::size_t, int>, FeaturePtr>& entries() const { return table_; }

private:
    std::map<std::pair<std::size_t, int>, FeaturePtr> table_;
};

FeatureTable compute_features(const prep::SmoothTable& smooth, std::size_t workers);

/// Binary cache: magic "FEAT", u16 version, then per entry the parcel id,
/// i32 season and 700 little-endian f32.
void save_feature_cache(const Dataset& dataset, const FeatureTable& table, const std::string& path);
FeatureTable load_feature_cache(const Dataset& dataset, const std::string& path);

}  // namespace cropfuse::features
