#include "cropfuse/cropdist/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cropfuse::cropdist {

GridIndex::GridIndex(std::span<const Point> points, double cell_size_m)
    : cell_(cell_size_m), points_(points.begin(), points.end()) {
    if (!(cell_ > 0.0)) throw std::invalid_argument("GridIndex: cell size must be positive");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("GridIndex: non-finite point");
        cells_[key_of(cell_coord(p.x), cell_coord(p.y))].push_back(i);
    }
}

std::int64_t GridIndex::cell_coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

GridIndex::Key GridIndex::key_of(std::int64_t cx, std::int64_t cy) const {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xFFFF'FFFFu);
}

std::vector<std::size_t> GridIndex::radius_query(Point center, double radius_m) const {
    if (radius_m > cell_) throw std::invalid_argument("GridIndex: radius larger than cell size");
    const double r2 = radius_m * radius_m;
    const auto cx = cell_coord(center.x);
    const auto cy = cell_coord(center.y);
    std::vector<std::size_t> out;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            const auto it = cells_.find(key_of(cx + dx, cy + dy));
            if (it == cells_.end()) continue;
            for (std::size_t idx : it->second) {
                const double ex = points_[idx].x - center.x;
                const double ey = points_[idx].y - center.y;
                if (ex * ex + ey * ey <= r2) out.push_back(idx);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace cropfuse::cropdist
