#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cropfuse/core/dataset.hpp"
#include "cropfuse/cropdist/grid_index.hpp"

namespace cropfuse::cropdist {

inline constexpr double kDefaultRadiusM = 10'000.0;

/// Area share of each crop around a parcel, rounded to 1e-4.
struct DistributionVector {
    std::vector<double> probs;
    bool empty_neighborhood = false;  // no labeled parcel in range, all zeros
};

double round_share(double p);

GridIndex build_grid_index(const Dataset& dataset, double cell_size_m = kDefaultRadiusM);

/// Sums the area of every parcel (the query parcel included) within
/// `radius_m` that has a label in `crops_of_year`, per crop code, and
/// normalizes. `crops_of_year` is indexed by parcel.
DistributionVector neighborhood_distribution(const Dataset& dataset, std::size_t parcel, const GridIndex& index,
                                             const std::vector<std::optional<CropCode>>& crops_of_year,
                                             double radius_m = kDefaultRadiusM);

/// Distributions of every parcel for labels of `season_year`.
std::vector<DistributionVector> distributions_for_year(const Dataset& dataset, int season_year, std::size_t workers,
                                                       double radius_m = kDefaultRadiusM);

/// Sparse CSV `parcel_id,crop_code,prob`, zero entries omitted.
void save_distribution_cache(const Dataset& dataset, const std::vector<DistributionVector>& dists,
                             const std::string& path);
std::vector<DistributionVector> load_distribution_cache(const Dataset& dataset, const std::string& path);

}  // namespace cropfuse::cropdist
