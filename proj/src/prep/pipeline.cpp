#include "cropfuse/prep/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <optional>

#include "cropfuse/util/binio.hpp"
#include "cropfuse/util/errors.hpp"
#include "cropfuse/util/parallel.hpp"

namespace cropfuse::prep {

GridSignal resample_2day(std::span<const int> days, std::span<const double> values) {
    std::vector<int> d;
    std::vector<double> v;
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (std::isnan(values[i])) continue;
        d.push_back(days[i]);
        v.push_back(values[i]);
    }
    if (d.size() < 2) throw InsufficientData("insufficient samples");

    GridSignal out;
    std::size_t seg = 0;
    for (std::size_t j = 0; j < kGridPoints; ++j) {
        const int day = static_cast<int>(j) * kGridStepDays;
        if (day < d.front()) {
            out.values[j] = v.front();
            out.weights[j] = 0.0;
            continue;
        }
        if (day > d.back()) {
            out.values[j] = v.back();
            out.weights[j] = 0.0;
            continue;
        }
        while (seg + 1 < d.size() && d[seg + 1] < day) ++seg;
        // d[seg] <= day <= d[seg + 1]
        const std::size_t next = std::min(seg + 1, d.size() - 1);
        if (d[seg] == day) {
            out.values[j] = v[seg];
        } else if (d[next] == day) {
            out.values[j] = v[next];
        } else {
            const double t = static_cast<double>(day - d[seg]) / static_cast<double>(d[next] - d[seg]);
            out.values[j] = v[seg] + t * (v[next] - v[seg]);
        }
        out.weights[j] = 1.0;
    }
    return out;
}

SmoothSeries prep_season(const RawSeries& raw, const PrepOptions& options) {
    raw.validate();
    const auto mask_b4 = hampel_filter(raw.values[kB4], raw.days, options.hampel);
    const auto mask_b8a = hampel_filter(raw.values[kB8A], raw.days, options.hampel);
    const auto clean = apply_outlier_mask(raw, mask_b4, mask_b8a);

    SmoothSeries out;
    for (std::size_t s = 0; s < kNumSignals; ++s) {
        const auto grid = resample_2day(clean.days, clean.values[s]);
        const double lambda = vcurve_lambda(grid.values, grid.weights, options.vcurve);
        const auto z = whittaker_smooth(grid.values, grid.weights, lambda);
        std::copy(z.begin(), z.end(), out.values[s].begin());
    }
    return out;
}

PrepError::PrepError(std::string parcel_id, int season_year, const std::string& what)
    : std::runtime_error("parcel " + parcel_id + " season " + std::to_string(season_year) + ": " + what),
      parcel_id_(std::move(parcel_id)),
      season_year_(season_year) {}

SmoothTable prep_dataset(const Dataset& dataset, std::size_t workers, const PrepOptions& options, int first_season,
                         int last_season) {
    struct Slot {
        std::vector<SmoothEntry> entries;
        std::size_t skipped = 0;
    };
    std::vector<Slot> slots(dataset.size());
    parallel_for(dataset.size(), workers, [&](std::size_t p) {
        for (int season : dataset.rs_seasons(p)) {
            if (season < first_season || season > last_season) continue;
            const auto& id = dataset.parcel(p).parcel_id;
            try {
                const auto raw = extract_season(dataset, p, season);
                slots[p].entries.push_back({p, season, prep_season(raw, options)});
            } catch (const InsufficientData&) {
                // the season stays a zero placeholder
                ++slots[p].skipped;
            } catch (const std::exception& e) {
                throw PrepError(id, season, e.what());
            }
        }
    });
    SmoothTable table;
    for (auto& s : slots) {
        table.skipped += s.skipped;
        for (auto& e : s.entries) table.entries.push_back(std::move(e));
    }
    return table;
}

namespace {
constexpr std::uint16_t kSmoothCacheVersion = 1;
}

void save_smooth_cache(const Dataset& dataset, const SmoothTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    binio::write_magic(out, "RSSM", kSmoothCacheVersion);
    for (const auto& e : table.entries) {
        binio::write_string(out, dataset.parcel(e.parcel).parcel_id);
        binio::write_i32(out, e.season_year);
        for (const auto& signal : e.series.values) {
            for (double v : signal) binio::write_f64(out, v);
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

SmoothTable load_smooth_cache(const Dataset& dataset, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    const auto version = binio::read_magic(in, "RSSM");
    if (version != kSmoothCacheVersion) throw DataError(path + ": unsupported RSSM version " + std::to_string(version));
    SmoothTable table;
    while (!binio::at_eof(in)) {
        const auto id = binio::read_string(in);
        const auto idx = dataset.find(id);
        if (!idx) throw DataError(path + ": unknown parcel_id " + id);
        SmoothEntry e;
        e.parcel = *idx;
        e.season_year = binio::read_i32(in);
        for (auto& signal : e.series.values) {
            for (double& v : signal) v = binio::read_f64(in);
        }
        table.entries.push_back(std::move(e));
    }
    return table;
}

}  // namespace cropfuse::prep
