#pragma once

#include <cstddef>
#include <vector>

#include "cropfuse/nn/tensor.hpp"

namespace cropfuse::nn {

template <typename S>
struct LstmWeights {
    const S* wx = nullptr;  // in x 4h, gate blocks [input | forget | candidate | output]
    const S* wh = nullptr;  // h x 4h
    const S* b = nullptr;   // 4h
    std::size_t in = 0;
    std::size_t hidden = 0;
};

template <typename S>
struct LstmGrads {
    S* wx = nullptr;
    S* wh = nullptr;
    S* b = nullptr;
};

/// Per-position activations of one LSTM pass, indexed by sequence position
/// (not processing order).
template <typename S>
struct LstmTrace {
    bool reverse = false;
    std::vector<Matrix<S>> gates;  // post-activation i, f, g, o
    std::vector<Matrix<S>> c;
    std::vector<Matrix<S>> tanh_c;
    std::vector<Matrix<S>> h;
};

/// One step from an explicit state; h and c are updated in place.
template <typename S>
void lstm_cell(const LstmWeights<S>& w, const Matrix<S>& x, Matrix<S>& h, Matrix<S>& c);

/// Runs the cell over xs from a zero state, right-to-left if `reverse`.
template <typename S>
LstmTrace<S> lstm_forward(const LstmWeights<S>& w, const std::vector<Matrix<S>>& xs, bool reverse);

/// Backpropagation through time. `dh[t]` is the loss gradient flowing into
/// h at position t (may be empty for positions without outside use).
/// Accumulates into `grads`; writes input gradients to `dxs` when non-null.
template <typename S>
void lstm_backward(const LstmWeights<S>& w, const std::vector<Matrix<S>>& xs, const LstmTrace<S>& trace,
                   const std::vector<Matrix<S>>& dh, const LstmGrads<S>& grads, std::vector<Matrix<S>>* dxs);

template <typename S>
struct AttentionWeights {
    const S* w = nullptr;  // dim x att
    const S* b = nullptr;  // att
    const S* v = nullptr;  // att
    std::size_t dim = 0;
    std::size_t att = 0;
};

template <typename S>
struct AttentionGrads {
    S* w = nullptr;
    S* b = nullptr;
    S* v = nullptr;
};

template <typename S>
struct AttentionTrace {
    std::vector<Matrix<S>> act;  // tanh(W h_w + b) per position
    Matrix<S> weights;           // rows x positions, softmax over positions
    Matrix<S> out;               // rows x dim
};

/// e_w = v . tanh(W h_w + b), u = softmax(e), out = sum_w u_w h_w.
template <typename S>
AttentionTrace<S> attention_forward(const AttentionWeights<S>& w, const std::vector<Matrix<S>>& hs);

template <typename S>
void attention_backward(const AttentionWeights<S>& w, const std::vector<Matrix<S>>& hs, const AttentionTrace<S>& trace,
                        const Matrix<S>& dout, const AttentionGrads<S>& grads, std::vector<Matrix<S>>& dhs);

/// y = tanh(x W + b), or affine when `activate` is false.
template <typename S>
Matrix<S> dense_forward(const Matrix<S>& x, const S* w, const S* b, std::size_t out, bool activate);

/// Given y from dense_forward and dy, accumulates gW, gb and returns dx
/// (skipped and returned empty when `need_dx` is false).
template <typename S>
Matrix<S> dense_backward(const Matrix<S>& x, const Matrix<S>& y, const Matrix<S>& dy, const S* w, S* gw, S* gb,
                         bool activate, bool need_dx);

/// Row-wise max-subtracted softmax.
template <typename S>
Matrix<S> softmax_rows(const Matrix<S>& logits);

}  // namespace cropfuse::nn
