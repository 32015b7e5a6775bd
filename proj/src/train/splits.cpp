#include "cropfuse/train/splits.hpp"

#include <algorithm>

#include "cropfuse/util/errors.hpp"

namespace cropfuse::train {

SplitSets build_splits(const Dataset& dataset, const features::FeatureTable& features, const SplitYears& years,
                       std::size_t workers, const SequenceOptions& options, double radius_m) {
    const auto sequences_for = [&](int year) {
        const auto dists = cropdist::distributions_for_year(dataset, year - 1, workers, radius_m);
        return build_sequences(dataset, features, dists, year, options);
    };
    SplitSets out;
    out.train = sequences_for(years.train);
    out.dev = sequences_for(years.dev);
    out.test = sequences_for(years.test);
    return out;
}

int last_labeled_year(const Dataset& dataset) {
    int last = -1;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& crops = dataset.crops_of(i);
        if (!crops.empty()) last = std::max(last, crops.rbegin()->first);
    }
    if (last < 0) throw DataError("dataset has no crop labels");
    return last;
}

}  // namespace cropfuse::train
