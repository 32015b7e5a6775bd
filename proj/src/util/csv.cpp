#include "cropfuse/util/csv.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "cropfuse/util/errors.hpp"

namespace cropfuse::csv {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

namespace {
std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}
}  // namespace

Reader::Reader(const std::string& path, std::string_view expected_header) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path);
    std::string header;
    if (!std::getline(in_, header)) throw DataError(path + ": empty file");
    line_ = 1;
    if (trim(header) != expected_header) {
        throw DataError(path + ":1: expected header '" + std::string(expected_header) + "'");
    }
    header_ = split(expected_header);
    columns_ = header_.size();
}

bool Reader::next() {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_;
        const auto line = trim(raw);
        if (line.empty()) continue;
        fields_ = split(line);
        for (auto& f : fields_) f = std::string(trim(f));
        if (fields_.size() != columns_) {
            fail("expected " + std::to_string(columns_) + " columns, got " + std::to_string(fields_.size()));
        }
        return true;
    }
    return false;
}

long long Reader::as_int(std::size_t col) const {
    const auto& s = field(col);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail(col, "invalid integer '" + s + "'");
    return value;
}

double Reader::as_double(std::size_t col) const {
    const auto& s = field(col);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail(col, "invalid number '" + s + "'");
    if (!std::isfinite(value)) fail(col, "non-finite number '" + s + "'");
    return value;
}

double Reader::as_double_or_missing(std::size_t col) const {
    if (field(col).empty()) return std::numeric_limits<double>::quiet_NaN();
    return as_double(col);
}

void Reader::fail(std::size_t col, const std::string& what) const {
    throw DataError(path_ + ":" + std::to_string(line_) + ": column '" + header_.at(col) + "': " + what);
}

void Reader::fail(const std::string& what) const {
    throw DataError(path_ + ":" + std::to_string(line_) + ": " + what);
}

}  // namespace cropfuse::csv
