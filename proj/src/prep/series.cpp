#include "cropfuse/prep/series.hpp"

#include <cmath>
#include <string>

#include "cropfuse/util/errors.hpp"

namespace cropfuse::prep {

void RawSeries::validate() const {
    for (const auto& v : values) {
        if (v.size() != days.size()) throw DataError("raw series: signal length mismatch");
    }
    for (std::size_t i = 1; i < days.size(); ++i) {
        if (days[i] <= days[i - 1]) throw DataError("raw series: dates not strictly ascending");
    }
    for (std::size_t i = 0; i < days.size(); ++i) {
        const auto check = [&](std::size_t s, double lo, double hi) {
            const double x = values[s][i];
            if (std::isnan(x)) return;
            if (!std::isfinite(x) || x < lo || x > hi) {
                throw DataError(std::string("raw series: ") + kSignalNames[s] + " value " + std::to_string(x) +
                                " out of range at day " + std::to_string(days[i]));
            }
        };
        check(kB4, 0.0, 1.2);
        check(kB8A, 0.0, 1.2);
        check(kLAI, 0.0, HUGE_VAL);
        check(kFAPAR, 0.0, 1.0);
    }
}

RawSeries extract_season(const Dataset& dataset, std::size_t parcel, int season_year) {
    RawSeries raw;
    for (const auto& s : dataset.samples_of(parcel)) {
        if (season_of(s.date) != season_year) continue;
        const int day = season_day(s.date);
        if (!raw.days.empty() && raw.days.back() == day) {
            throw DataError("parcel " + dataset.parcel(parcel).parcel_id + ": duplicate date " + format_date(s.date));
        }
        raw.days.push_back(day);
        for (std::size_t k = 0; k < kNumSignals; ++k) raw.values[k].push_back(s.values[k]);
    }
    return raw;
}

}  // namespace cropfuse::prep
