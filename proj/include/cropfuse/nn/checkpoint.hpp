#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cropfuse/nn/params.hpp"

namespace cropfuse::nn {

/// Optimizer moments and loop position needed to resume training.
struct TrainingState {
    std::uint64_t adam_step = 0;
    std::vector<Tensor<float>> adam_m;  // one per parameter, same order
    std::vector<Tensor<float>> adam_v;
    std::int32_t epochs_done = 0;
    std::int32_t best_epoch = 0;  // 0 = none yet
    double best_dev_acc = -1.0;
    std::int32_t epochs_since_best = 0;
    std::vector<Tensor<float>> current_values;  // parameters after the last epoch
};

/// `params` is the model to predict with (the best epoch when written by
/// training); the optional state holds where training left off.
struct Checkpoint {
    ModelParams<float> params;
    std::uint64_t seed = 0;
    bool has_state = false;
    TrainingState state;
};

/// Layout: "ROTA", u16 version, u8 variant tag, 9 x i32 dims, u64 seed,
/// u32 tensor count, tensors (name, u8 rank, u32 extents, f32 values),
/// then u8 state flag and the optional training state.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cropfuse::nn
