#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace cropfuse::cropdist {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Uniform grid over projected coordinates. Queries with radius up to the
/// cell size scan the 3x3 block of cells around the query point and keep
/// points at Euclidean distance <= radius.
class GridIndex {
public:
    explicit GridIndex(std::span<const Point> points, double cell_size_m = 10'000.0);

    double cell_size() const { return cell_; }
    std::size_t occupied_cells() const { return cells_.size(); }

    /// Indices of points within `radius_m` of `center`, ascending.
    /// Throws std::invalid_argument when radius exceeds the cell size.
    std::vector<std::size_t> radius_query(Point center, double radius_m) const;

private:
    using Key = std::uint64_t;
    Key key_of(std::int64_t cx, std::int64_t cy) const;
    std::int64_t cell_coord(double v) const;

    double cell_;
    std::vector<Point> points_;
    std::unordered_map<Key, std::vector<std::size_t>> cells_;
};

}  // namespace cropfuse::cropdist
