#include "cropfuse/core/sequences.hpp"

#include "cropfuse/util/errors.hpp"

namespace cropfuse {

const features::SeasonFeatures& zero_features() {
    static const features::SeasonFeatures zero{};
    return zero;
}

const features::SeasonFeatures& SequenceStep::features_or_zero() const {
    return features ? *features : zero_features();
}

std::vector<ParcelSequence> build_sequences(const Dataset& dataset, const features::FeatureTable& features,
                                            const std::vector<cropdist::DistributionVector>& dists, int target_year,
                                            const SequenceOptions& options) {
    if (options.steps < 1) throw std::invalid_argument("build_sequences: steps must be >= 1");
    if (!dists.empty() && dists.size() != dataset.size()) {
        throw std::invalid_argument("build_sequences: distribution table size mismatch");
    }
    const CropCode unknown = dataset.num_classes();
    std::vector<ParcelSequence> out;
    for (std::size_t p = 0; p < dataset.size(); ++p) {
        if (!dataset.crop_at(p, target_year)) continue;
        ParcelSequence seq;
        seq.parcel = p;
        seq.parcel_id = dataset.parcel(p).parcel_id;
        seq.steps.reserve(static_cast<std::size_t>(options.steps));
        for (int y = target_year - options.steps + 1; y <= target_year; ++y) {
            SequenceStep step;
            step.season_year = y;
            step.prev_crop = dataset.crop_at(p, y - 1).value_or(unknown);
            step.label = dataset.crop_at(p, y).value_or(unknown);
            if (y >= options.rs_start_year) step.features = features.find(p, y);
            seq.steps.push_back(std::move(step));
        }
        if (dists.empty()) {
            seq.dist.probs.assign(static_cast<std::size_t>(dataset.num_classes()), 0.0);
            seq.dist.empty_neighborhood = true;
        } else {
            seq.dist = dists[p];
        }
        out.push_back(std::move(seq));
    }
    if (out.empty()) throw DataError("empty target set");
    return out;
}

}  // namespace cropfuse
