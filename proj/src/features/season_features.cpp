#include "cropfuse/features/season_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "cropfuse/util/binio.hpp"
#include "cropfuse/util/errors.hpp"
#include "cropfuse/util/parallel.hpp"

namespace cropfuse::features {

bool SeasonFeatures::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

std::array<WindowSlice, kNumWindows> window_slices(int season_len_days) {
    std::array<WindowSlice, kNumWindows> out;
    const int grid_end = static_cast<int>(prep::kGridPoints) * prep::kGridStepDays;  // 366
    const int limit = std::min(season_len_days, grid_end);
    for (std::size_t i = 0; i < kNumWindows; ++i) {
        auto& w = out[i];
        w.start_day = static_cast<int>(i) * kWindowStepDays;
        w.end_day = std::min(w.start_day + kWindowDays, limit);
        w.first = static_cast<std::size_t>((w.start_day + prep::kGridStepDays - 1) / prep::kGridStepDays);
        w.last = static_cast<std::size_t>((w.end_day - 1) / prep::kGridStepDays);
    }
    return out;
}

std::array<double, kNumFunctionals> functionals(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("functionals: empty window");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        const double c = sorted.front();
        return {c, 0.0, c, c, c, c, c};
    }
    const auto n = static_cast<double>(sorted.size());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double var = 0.0;
    for (double v : sorted) var += (v - mean) * (v - mean);
    const auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };
    return {mean, std::sqrt(var / n), quantile(0.25), quantile(0.5), quantile(0.75), sorted.front(), sorted.back()};
}

SeasonFeatures season_features(const prep::SmoothSeries& smooth) {
    SeasonFeatures out;
    const auto slices = window_slices();
    for (std::size_t w = 0; w < kNumWindows; ++w) {
        const auto& sl = slices[w];
        for (std::size_t s = 0; s < kNumSignals; ++s) {
            const std::span<const double> grid(smooth.values[s].data() + sl.first, sl.count());
            const auto f = functionals(grid);
            for (std::size_t k = 0; k < kNumFunctionals; ++k) {
                out.values[w * kFeaturesPerWindow + s * kNumFunctionals + k] = static_cast<float>(f[k]);
            }
        }
    }
    return out;
}

SeasonFeatures truncate_at(const SeasonFeatures& features, int cutoff_day) {
    SeasonFeatures out = features;
    for (std::size_t w = 0; w < kNumWindows; ++w) {
        if (static_cast<int>(w) * kWindowStepDays >= cutoff_day) {
            std::fill_n(out.values.begin() + static_cast<std::ptrdiff_t>(w * kFeaturesPerWindow), kFeaturesPerWindow,
                        0.0f);
        }
    }
    return out;
}

std::vector<int> augment_cutoffs() {
    std::vector<int> out;
    for (int d = 165; d < 365; d += kWindowStepDays) out.push_back(d);
    out.push_back(365);
    return out;
}

int draw_augment_cutoff(std::mt19937_64& rng) {
    static const auto cutoffs = augment_cutoffs();
    std::uniform_int_distribution<std::size_t> pick(0, cutoffs.size() - 1);
    return cutoffs[pick(rng)];
}

SeasonFeatures augment_crop(const SeasonFeatures& features, std::mt19937_64& rng) {
    return truncate_at(features, draw_augment_cutoff(rng));
}

void FeatureTable::insert(std::size_t parcel, int season, FeaturePtr features) {
    table_[{parcel, season}] = std::move(features);
}

FeaturePtr FeatureTable::find(std::size_t parcel, int season) const {
    const auto it = table_.find({parcel, season});
    return it == table_.end() ? nullptr : it->second;
}

FeatureTable compute_features(const prep::SmoothTable& smooth, std::size_t workers) {
    std::vector<FeaturePtr> computed(smooth.entries.size());
    parallel_for(smooth.entries.size(), workers, [&](std::size_t i) {
        computed[i] = std::make_shared<const SeasonFeatures>(season_features(smooth.entries[i].series));
    });
    FeatureTable table;
    for (std::size_t i = 0; i < computed.size(); ++i) {
        table.insert(smooth.entries[i].parcel, smooth.entries[i].season_year, std::move(computed[i]));
    }
    return table;
}

namespace {
constexpr std::uint16_t kFeatureCacheVersion = 1;
}

void save_feature_cache(const Dataset& dataset, const FeatureTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    binio::write_magic(out, "FEAT", kFeatureCacheVersion);
    for (const auto& [key, f] : table.entries()) {
        binio::write_string(out, dataset.parcel(key.first).parcel_id);
        binio::write_i32(out, key.second);
        for (float v : f->values) binio::write_f32(out, v);
    }
    if (!out) throw DataError("write failed: " + path);
}

FeatureTable load_feature_cache(const Dataset& dataset, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    const auto version = binio::read_magic(in, "FEAT");
    if (version != kFeatureCacheVersion) throw DataError(path + ": unsupported FEAT version " + std::to_string(version));
    FeatureTable table;
    while (!binio::at_eof(in)) {
        const auto id = binio::read_string(in);
        const auto idx = dataset.find(id);
        if (!idx) throw DataError(path + ": unknown parcel_id " + id);
        const int season = binio::read_i32(in);
        auto f = std::make_shared<SeasonFeatures>();
        for (float& v : f->values) v = binio::read_f32(in);
        table.insert(*idx, season, std::move(f));
    }
    return table;
}

}  // namespace cropfuse::features
