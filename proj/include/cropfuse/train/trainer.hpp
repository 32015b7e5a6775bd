#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cropfuse/core/sequences.hpp"
#include "cropfuse/eval/metrics.hpp"
#include "cropfuse/nn/checkpoint.hpp"
#include "cropfuse/nn/model.hpp"

namespace cropfuse::train {

enum class Precision { F32, F64 };

struct TrainConfig {
    nn::Variant variant = nn::Variant::Final;
    double lr = 1e-3;
    std::size_t batch_size = 128;
    int max_epochs = 50;
    int patience = 5;
    std::uint64_t seed = 1;
    bool augment = false;
    nn::ModelDims dims;  // num_classes is filled from the data when 0
    Precision precision = Precision::F32;

    /// Small network and schedule that trains the synthetic benchmark in
    /// minutes on one core; the defaults above are the full-size network.
    static TrainConfig desk_scale();

    /// Throws std::invalid_argument on lr <= 0, batch_size 0, patience
    /// outside [0, max_epochs] or max_epochs < 1.
    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_acc = 0.0;
    double dev_macro_f1 = 0.0;
    double seconds = 0.0;
};

/// `epoch, train_loss, dev_acc, dev_macro_f1, seconds`, tab separated.
std::string format_log_line(const EpochLog& row);

struct TrainResult {
    nn::Checkpoint checkpoint;  // best-dev parameters plus resume state
    std::vector<EpochLog> log;  // epochs run by this call
    bool diverged = false;
    std::string message;
};

/// Called after every completed epoch with the checkpoint as it stands.
using EpochCallback = std::function<void(const nn::Checkpoint&, const EpochLog&)>;

/// Mini-batch Adam on the target-step cross-entropy with early stopping
/// on dev accuracy. Continues from `resume` when it carries training
/// state. On a non-finite loss or gradient the run stops and the result
/// holds the last checkpoint completed before the failure.
TrainResult train(const std::vector<ParcelSequence>& train_set, const std::vector<ParcelSequence>& dev_set,
                  const TrainConfig& config, const nn::Checkpoint* resume = nullptr,
                  const EpochCallback& on_epoch = {});

/// Batch of the given sequences. With `cutoffs` non-empty, element i's
/// target-season features are truncated at cutoffs[i]; truncated copies
/// live in `storage`.
nn::SequenceBatch make_batch(const std::vector<ParcelSequence>& sequences, std::span<const std::size_t> indices,
                             std::size_t num_classes, std::span<const int> cutoffs,
                             std::vector<features::SeasonFeatures>& storage);

/// Fine-level probabilities for every sequence with the target season
/// truncated at `cutoff_day`. Outputs do not depend on `batch_size`.
template <typename S>
eval::PredictionSet predict(const nn::ModelParams<S>& params, const std::vector<ParcelSequence>& sequences,
                            int cutoff_day = 365, std::size_t batch_size = 256);

/// Cutoffs of the in-season sweep: 165, 180, ..., 360 and 365.
std::vector<int> sweep_cutoffs();

struct SweepPoint {
    int cutoff_day = 0;
    double micro_f1 = 0.0;
};

/// Micro-F1 at `level` for each cutoff.
std::vector<SweepPoint> inseason_sweep(const nn::ModelParams<float>& params,
                                       const std::vector<ParcelSequence>& sequences, const LabelTaxonomy& taxonomy,
                                       std::span<const int> cutoffs, Level level = Level::C10);

std::string format_sweep(const std::vector<SweepPoint>& points);

}  // namespace cropfuse::train
