#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cropfuse/core/taxonomy.hpp"

namespace cropfuse::eval {

/// Sums fine probabilities per coarse group. At c10 the excluded groups'
/// mass is dropped, so the result sums to 1 minus that mass.
std::vector<double> aggregate_probs(const LabelTaxonomy& taxonomy, std::span<const double> fine, Level level);

/// Probability mass per excluded c12 group (same order as
/// LabelTaxonomy::excluded_c12_groups).
std::vector<double> excluded_mass(const LabelTaxonomy& taxonomy, std::span<const double> fine);

struct LevelPrediction {
    CropCode predicted = 0;  // kExcluded when an excluded group wins at c10
    double prob = 0.0;       // probability of the predicted class or group
};

/// Argmax of the aggregated probabilities (lowest index on ties). At c10
/// the excluded groups compete with their summed mass; winning makes the
/// prediction kExcluded.
LevelPrediction predict_level(const LabelTaxonomy& taxonomy, std::span<const double> fine, Level level);

struct ClassMetrics {
    CropCode cls = 0;
    std::size_t support = 0;
    std::size_t predicted = 0;
    std::size_t true_positive = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    Level level = Level::Fine;
    std::size_t num_classes = 0;
    std::size_t evaluated = 0;     // parcels scored
    std::size_t total = 0;         // parcels before threshold filtering
    std::size_t dropped = 0;       // parcels whose label is excluded at this level
    double threshold = 0.0;        // 0 = no filtering
    double coverage = 1.0;
    std::vector<ClassMetrics> classes;  // every class, support may be 0
    std::vector<std::vector<std::size_t>> confusion;  // [label][predicted]
    std::size_t excluded_predictions = 0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    double micro_f1 = 0.0;
};

/// Metrics from label/prediction pairs over classes 0..num_classes-1.
/// Predictions may be kExcluded: such a parcel is a miss for its label's
/// class and a false positive for no class. Macro averages cover classes
/// with support > 0; F1 is 0 when precision and recall are both 0.
/// Throws std::invalid_argument on an empty set or out-of-range labels.
EvalReport evaluate_classes(std::span<const CropCode> labels, std::span<const CropCode> predicted,
                            std::size_t num_classes);

/// Per-parcel fine probabilities (row-major, V per parcel) with fine labels.
struct PredictionSet {
    std::vector<std::string> parcel_ids;
    std::vector<double> probs;
    std::vector<CropCode> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {probs.data() + i * num_classes, num_classes}; }
};

/// Aggregates, drops parcels whose label is excluded at `level`, optionally
/// keeps only predictions with probability > threshold, and scores.
EvalReport evaluate(const PredictionSet& predictions, const LabelTaxonomy& taxonomy, Level level,
                    double threshold = 0.0);

/// Parcels whose predicted-class probability at `level` exceeds tau, and
/// the retained fraction.
struct ThresholdResult {
    std::vector<std::size_t> kept;
    double coverage = 0.0;
};
ThresholdResult threshold_filter(const PredictionSet& predictions, const LabelTaxonomy& taxonomy, Level level,
                                 double tau);

std::string report_tsv(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace cropfuse::eval
