#pragma once

#include <cstddef>
#include <vector>

#include "cropfuse/nn/params.hpp"

namespace cropfuse::nn {

/// A batch of parcel histories in model-ready form. Entries are indexed
/// [element * steps + step]; the last step is the target season.
struct SequenceBatch {
    std::size_t size = 0;
    std::size_t steps = 0;
    std::vector<int> prev_crop;          // V = UNKNOWN
    std::vector<const float*> features;  // dims.feature_length() floats each; nullptr = zero block
    std::vector<float> dist;             // size * V, used by the fusion variant
    std::vector<int> labels;             // target-step labels; only read by the loss

    void resize(std::size_t n, std::size_t t, std::size_t num_classes);
};

template <typename S>
struct ForwardResult {
    Matrix<S> logits;  // size x V
    Matrix<S> probs;
    /// Window attention weights [element][step][window] for the
    /// hierarchical variants, empty otherwise.
    std::vector<float> attention;
};

/// Pure function of (params, batch). Each element's outputs depend only on
/// that element, so results do not change with batch composition.
/// Throws std::invalid_argument on variant/shape mismatch and
/// NumericalError on non-finite activations.
template <typename S>
ForwardResult<S> forward(const ModelParams<S>& params, const SequenceBatch& batch);

/// Mean cross-entropy of the target-step labels; overwrites every gradient
/// buffer in `params` with the exact gradient of that loss.
template <typename S>
S loss_and_backward(ModelParams<S>& params, const SequenceBatch& batch);

}  // namespace cropfuse::nn
