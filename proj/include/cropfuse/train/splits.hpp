#pragma once

#include <cstddef>
#include <vector>

#include "cropfuse/core/dataset.hpp"
#include "cropfuse/core/sequences.hpp"
#include "cropfuse/cropdist/distribution.hpp"
#include "cropfuse/features/season_features.hpp"
#include "cropfuse/prep/pipeline.hpp"

namespace cropfuse::train {

/// Target years of the three sets; the test year defaults to the last
/// labeled season and the others step back one year each.
struct SplitYears {
    int train = 0;
    int dev = 0;
    int test = 0;

    static SplitYears ending_at(int test_year) { return {test_year - 2, test_year - 1, test_year}; }
};

struct SplitSets {
    std::vector<ParcelSequence> train;
    std::vector<ParcelSequence> dev;
    std::vector<ParcelSequence> test;
};

/// Sequences for the three target years. Each target year's distribution
/// vectors come from the labels of the season before it.
SplitSets build_splits(const Dataset& dataset, const features::FeatureTable& features, const SplitYears& years,
                       std::size_t workers, const SequenceOptions& options = {},
                       double radius_m = cropdist::kDefaultRadiusM);

/// Last season holding any label.
int last_labeled_year(const Dataset& dataset);

}  // namespace cropfuse::train
