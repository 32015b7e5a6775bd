#include "cropfuse/core/dates.hpp"

#include <charconv>
#include <cstdio>

#include "cropfuse/util/errors.hpp"

namespace cropfuse {

namespace {
int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const auto* first = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len) throw DataError("invalid date '" + std::string(text) + "'");
    return value;
}
}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("invalid date '" + std::string(text) + "'");
    }
    const Date date{std::chrono::year{parse_fixed(text, 0, 4)},
                    std::chrono::month{static_cast<unsigned>(parse_fixed(text, 5, 2))},
                    std::chrono::day{static_cast<unsigned>(parse_fixed(text, 8, 2))}};
    if (!date.ok()) throw DataError("invalid date '" + std::string(text) + "'");
    return date;
}

std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

int season_of(const Date& date) {
    const int year = static_cast<int>(date.year());
    return static_cast<unsigned>(date.month()) >= 10 ? year + 1 : year;
}

Date season_start(int season_year) {
    return Date{std::chrono::year{season_year - 1}, std::chrono::October, std::chrono::day{1}};
}

int season_day(const Date& date) {
    const auto start = std::chrono::sys_days{season_start(season_of(date))};
    return static_cast<int>((std::chrono::sys_days{date} - start).count());
}

int season_length(int season_year) {
    return static_cast<int>(
        (std::chrono::sys_days{season_start(season_year + 1)} - std::chrono::sys_days{season_start(season_year)})
            .count());
}

}  // namespace cropfuse
