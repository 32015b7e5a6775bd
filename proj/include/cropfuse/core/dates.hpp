#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace cropfuse {

using Date = std::chrono::year_month_day;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws DataError on
/// malformed text or impossible dates such as 2019-02-30.
Date parse_date(std::string_view text);

std::string format_date(const Date& date);

/// Cropping season a date belongs to: season N runs from October 1 of
/// N-1 through September 30 of N.
int season_of(const Date& date);

/// First day (October 1 of N-1) of season N.
Date season_start(int season_year);

/// Days elapsed since the first day of the date's season (0-based).
int season_day(const Date& date);

/// 365 or 366 depending on whether the season contains February 29.
int season_length(int season_year);

}  // namespace cropfuse
