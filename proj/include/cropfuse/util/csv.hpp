#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace cropfuse::csv {

/// Line-oriented reader for the plain comma-separated files used by the
/// data loaders (no quoting). Errors carry file, line and column.
class Reader {
public:
    Reader(const std::string& path, std::string_view expected_header);

    /// Advances to the next non-empty row. Returns false at end of file.
    bool next();

    std::size_t line() const { return line_; }
    std::size_t size() const { return fields_.size(); }
    const std::string& field(std::size_t col) const { return fields_.at(col); }

    long long as_int(std::size_t col) const;
    double as_double(std::size_t col) const;
    /// Empty cell -> NaN.
    double as_double_or_missing(std::size_t col) const;

    [[noreturn]] void fail(std::size_t col, const std::string& what) const;
    [[noreturn]] void fail(const std::string& what) const;

private:
    std::string path_;
    std::ifstream in_;
    std::size_t line_ = 0;
    std::size_t columns_ = 0;
    std::vector<std::string> header_;
    std::vector<std::string> fields_;
};

std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace cropfuse::csv
