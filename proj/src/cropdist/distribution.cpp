#include "cropfuse/cropdist/distribution.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cropfuse/util/csv.hpp"
#include "cropfuse/util/errors.hpp"
#include "cropfuse/util/parallel.hpp"

namespace cropfuse::cropdist {

double round_share(double p) { return std::round(p * 1e4) / 1e4; }

GridIndex build_grid_index(const Dataset& dataset, double cell_size_m) {
    std::vector<Point> pts;
    pts.reserve(dataset.size());
    for (const auto& p : dataset.parcels()) pts.push_back({p.centroid_x, p.centroid_y});
    return GridIndex(pts, cell_size_m);
}

DistributionVector neighborhood_distribution(const Dataset& dataset, std::size_t parcel, const GridIndex& index,
                                             const std::vector<std::optional<CropCode>>& crops_of_year,
                                             double radius_m) {
    DistributionVector out;
    out.probs.assign(static_cast<std::size_t>(dataset.num_classes()), 0.0);
    const auto& p = dataset.parcel(parcel);
    double total = 0.0;
    for (std::size_t n : index.radius_query({p.centroid_x, p.centroid_y}, radius_m)) {
        const auto& code = crops_of_year.at(n);
        if (!code) continue;
        const double area = dataset.parcel(n).area_ha;
        out.probs[static_cast<std::size_t>(*code)] += area;
        total += area;
    }
    if (total <= 0.0) {
        out.empty_neighborhood = true;
        return out;
    }
    for (double& v : out.probs) v = round_share(v / total);
    return out;
}

std::vector<DistributionVector> distributions_for_year(const Dataset& dataset, int season_year, std::size_t workers,
                                                       double radius_m) {
    const auto index = build_grid_index(dataset, std::max(radius_m, 1.0));
    const auto crops = dataset.crops_in(season_year);
    std::vector<DistributionVector> out(dataset.size());
    parallel_for(dataset.size(), workers,
                 [&](std::size_t i) { out[i] = neighborhood_distribution(dataset, i, index, crops, radius_m); });
    return out;
}

void save_distribution_cache(const Dataset& dataset, const std::vector<DistributionVector>& dists,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "parcel_id,crop_code,prob\n";
    char buf[32];
    for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t c = 0; c < dists[i].probs.size(); ++c) {
            if (dists[i].probs[c] == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.4f", dists[i].probs[c]);
            out << dataset.parcel(i).parcel_id << ',' << c << ',' << buf << '\n';
        }
    }
}

std::vector<DistributionVector> load_distribution_cache(const Dataset& dataset, const std::string& path) {
    std::vector<DistributionVector> out(dataset.size());
    for (auto& d : out) {
        d.probs.assign(static_cast<std::size_t>(dataset.num_classes()), 0.0);
        d.empty_neighborhood = true;
    }
    csv::Reader r(path, "parcel_id,crop_code,prob");
    while (r.next()) {
        const auto idx = dataset.find(r.field(0));
        if (!idx) r.fail(0, "unknown parcel_id " + r.field(0));
        const auto code = r.as_int(1);
        if (code < 0 || code >= dataset.num_classes()) r.fail(1, "crop code out of range");
        const double p = r.as_double(2);
        if (p < 0.0 || p > 1.0) r.fail(2, "probability outside [0, 1]");
        out[*idx].probs[static_cast<std::size_t>(code)] = p;
        out[*idx].empty_neighborhood = false;
    }
    return out;
}

}  // namespace cropfuse::cropdist
