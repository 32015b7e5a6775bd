#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cropfuse/prep/hampel.hpp"
#include "cropfuse/prep/series.hpp"
#include "cropfuse/prep/whittaker.hpp"

namespace cropfuse::prep {

/// One signal interpolated on the 2-day grid with Whittaker weights.
struct GridSignal {
    std::array<double, kGridPoints> values{};
    std::array<double, kGridPoints> weights{};
};

/// Linear interpolation of one signal onto the grid between its first and
/// last observation (weight 1); outside that span the edge value is
/// repeated with weight 0. Throws InsufficientData("insufficient
/// samples") with fewer than two observations.
GridSignal resample_2day(std::span<const int> days, std::span<const double> values);

struct PrepOptions {
    HampelOptions hampel;
    VCurveGrid vcurve;
};

/// Hampel on B4 and B8A -> mask all signals -> resample -> per-signal
/// V-curve lambda -> Whittaker.
SmoothSeries prep_season(const RawSeries& raw, const PrepOptions& options = {});

/// prep_season failure tagged with the parcel-season it happened in.
class PrepError : public std::runtime_error {
public:
    PrepError(std::string parcel_id, int season_year, const std::string& what);
    const std::string& parcel_id() const { return parcel_id_; }
    int season_year() const { return season_year_; }

private:
    std::string parcel_id_;
    int season_year_;
};

struct SmoothEntry {
    std::size_t parcel = 0;
    int season_year = 0;
    SmoothSeries series;
};

struct SmoothTable {
    std::vector<SmoothEntry> entries;  // ordered by (parcel, season)
    std::size_t skipped = 0;           // seasons with fewer than 2 usable samples
};

/// Runs prep_season for every parcel-season with RS data in
/// [first_season, last_season]. Results do not depend on `workers`.
SmoothTable prep_dataset(const Dataset& dataset, std::size_t workers, const PrepOptions& options = {},
                         int first_season = 0, int last_season = 1 << 30);

/// Binary cache: magic "RSSM", u16 version, then per entry the parcel id,
/// i32 season and 4 x 183 little-endian f64.
void save_smooth_cache(const Dataset& dataset, const SmoothTable& table, const std::string& path);
SmoothTable load_smooth_cache(const Dataset& dataset, const std::string& path);

}  // namespace cropfuse::prep
