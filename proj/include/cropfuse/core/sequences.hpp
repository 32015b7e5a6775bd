#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cropfuse/core/dataset.hpp"
#include "cropfuse/cropdist/distribution.hpp"
#include "cropfuse/features/season_features.hpp"

namespace cropfuse {

inline constexpr int kDefaultSteps = 10;

/// One season of a parcel's history. The step for season y pairs the
/// previous season's crop with season y's RS features and predicts the
/// crop of season y. `prev_crop` and `label` use V as the UNKNOWN token.
struct SequenceStep {
    int season_year = 0;
    CropCode prev_crop = 0;
    features::FeaturePtr features;  // null = all-zero placeholder
    CropCode label = 0;

    bool has_features() const { return features != nullptr; }
    /// The features, or a shared all-zero block for placeholders.
    const features::SeasonFeatures& features_or_zero() const;
};

struct ParcelSequence {
    std::size_t parcel = 0;
    std::string parcel_id;
    std::vector<SequenceStep> steps;
    cropdist::DistributionVector dist;

    CropCode target() const { return steps.back().label; }
};

const features::SeasonFeatures& zero_features();

struct SequenceOptions {
    int steps = kDefaultSteps;
    /// Seasons before this year always get zero RS placeholders.
    int rs_start_year = 2016;
};

/// One sequence per parcel labeled in `target_year`, covering seasons
/// target_year - steps + 1 .. target_year. `dists` is indexed by parcel;
/// pass an empty vector to attach all-zero distributions.
/// Throws DataError("empty target set") if no parcel has a target label.
std::vector<ParcelSequence> build_sequences(const Dataset& dataset, const features::FeatureTable& features,
                                            const std::vector<cropdist::DistributionVector>& dists, int target_year,
                                            const SequenceOptions& options = {});

}  // namespace cropfuse
