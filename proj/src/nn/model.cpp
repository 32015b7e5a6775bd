#include "cropfuse/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "cropfuse/nn/layers.hpp"

namespace cropfuse::nn {

void SequenceBatch::resize(std::size_t n, std::size_t t, std::size_t num_classes) {
    size = n;
    steps = t;
    prev_crop.assign(n * t, static_cast<int>(num_classes));
    features.assign(n * t, nullptr);
    dist.assign(n * num_classes, 0.0f);
    labels.assign(n, 0);
}

namespace {

template <typename S>
LstmWeights<S> lstm_weights(const ModelParams<S>& p, const std::string& prefix) {
    const auto& wx = p[prefix + ".Wx"].value;
    return {wx.ptr(), p[prefix + ".Wh"].value.ptr(), p[prefix + ".b"].value.ptr(), wx.shape[0], wx.shape[1] / 4};
}

template <typename S>
LstmGrads<S> lstm_grads(ModelParams<S>& p, const std::string& prefix) {
    return {p[prefix + ".Wx"].grad.ptr(), p[prefix + ".Wh"].grad.ptr(), p[prefix + ".b"].grad.ptr()};
}

template <typename S>
AttentionWeights<S> attention_weights(const ModelParams<S>& p) {
    const auto& w = p["att.W"].value;
    return {w.ptr(), p["att.b"].value.ptr(), p["att.v"].value.ptr(), w.shape[0], w.shape[1]};
}

std::string year_prefix(int layer) { return "year" + std::to_string(layer); }

/// Everything the backward pass needs from the forward pass.
template <typename S>
struct Cache {
    std::size_t B = 0, T = 0, V = 0;
    // unique RS blocks
    std::vector<std::size_t> row_of;  // per (b, t) that reads RS, else npos
    std::size_t rows = 0;
    std::vector<Matrix<S>> win_x;  // per window: rows x Fw
    Matrix<S> flat_x;              // rows x F
    Matrix<S> rs_out;              // rows x rs width (flat or attended)
    LstmTrace<S> win_fwd, win_bwd;
    std::vector<Matrix<S>> win_h;  // per window: [fwd; bwd]
    AttentionTrace<S> att;
    // year level
    std::vector<std::vector<Matrix<S>>> year_x;  // per layer, per step
    std::vector<LstmTrace<S>> year;
    Matrix<S> top;  // B x hidden feeding the head
    Matrix<S> fc_in, fc1, fc2;
    ForwardResult<S> result;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

template <typename S>
void check_batch(const ModelParams<S>& params, const SequenceBatch& batch) {
    validate_params(params);
    const auto& d = params.dims();
    const std::size_t V = static_cast<std::size_t>(d.num_classes);
    const std::size_t n = batch.size * batch.steps;
    if (batch.size == 0 || batch.steps == 0) throw std::invalid_argument("empty batch");
    if (batch.prev_crop.size() != n || batch.features.size() != n) throw std::invalid_argument("batch shape mismatch");
    if (uses_distribution(params.variant()) && batch.dist.size() != batch.size * V) {
        throw std::invalid_argument("distribution length does not match the number of classes");
    }
    for (int c : batch.prev_crop) {
        if (c < 0 || static_cast<std::size_t>(c) > V) throw std::invalid_argument("crop code out of embedding range");
    }
}

template <typename S>
void run_forward(const ModelParams<S>& params, const SequenceBatch& batch, Cache<S>& k) {
    check_batch(params, batch);
    const Variant variant = params.variant();
    const ModelDims& d = params.dims();
    k.B = batch.size;
    k.T = batch.steps;
    k.V = static_cast<std::size_t>(d.num_classes);
    const std::size_t B = k.B, T = k.T, V = k.V;
    const std::size_t W = static_cast<std::size_t>(d.num_windows), Fw = static_cast<std::size_t>(d.window_features),
                      F = W * Fw;

    const bool yi = is_year_independent(variant);
    const bool rs = yi || uses_flat_rs(variant) || uses_window_rnn(variant);

    // Deduplicate RS blocks: identical pointers share one row, placeholders
    // share a single zero row.
    k.row_of.assign(B * T, kNone);
    std::vector<const float*> sources;
    if (rs) {
        std::map<const float*, std::size_t> seen;
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = yi ? T - 1 : 0; t < T; ++t) {
                const float* f = batch.features[b * T + t];
                auto [it, fresh] = seen.try_emplace(f, sources.size());
                if (fresh) sources.push_back(f);
                k.row_of[b * T + t] = it->second;
            }
        }
    }
    k.rows = sources.size();
    const std::size_t U = k.rows;

    if (yi || uses_window_rnn(variant)) {
        k.win_x.assign(W, Matrix<S>(U, Fw));
        for (std::size_t u = 0; u < U; ++u) {
            if (!sources[u]) continue;
            for (std::size_t w = 0; w < W; ++w) {
                S* dst = k.win_x[w].row(u);
                for (std::size_t j = 0; j < Fw; ++j) dst[j] = static_cast<S>(sources[u][w * Fw + j]);
            }
        }
        k.win_fwd = lstm_forward(lstm_weights(params, "win_fwd"), k.win_x, false);
    }
    if (uses_window_rnn(variant)) {
        k.win_bwd = lstm_forward(lstm_weights(params, "win_bwd"), k.win_x, true);
        const std::size_t dw = static_cast<std::size_t>(d.window_hidden);
        k.win_h.assign(W, Matrix<S>(U, 2 * dw));
        for (std::size_t w = 0; w < W; ++w) {
            for (std::size_t u = 0; u < U; ++u) {
                S* dst = k.win_h[w].row(u);
                std::copy(k.win_fwd.h[w].row(u), k.win_fwd.h[w].row(u) + dw, dst);
                std::copy(k.win_bwd.h[w].row(u), k.win_bwd.h[w].row(u) + dw, dst + dw);
            }
        }
        k.att = attention_forward(attention_weights(params), k.win_h);
        k.rs_out = k.att.out;
    }
    if (uses_flat_rs(variant)) {
        k.flat_x = Matrix<S>(U, F);
        for (std::size_t u = 0; u < U; ++u) {
            if (!sources[u]) continue;
            for (std::size_t j = 0; j < F; ++j) k.flat_x(u, j) = static_cast<S>(sources[u][j]);
        }
        const auto& w = params["rs.W"].value;
        k.rs_out = dense_forward(k.flat_x, w.ptr(), params["rs.b"].value.ptr(), w.shape[1], true);
    }

    if (yi) {
        const std::size_t dw = static_cast<std::size_t>(d.window_hidden);
        k.top = Matrix<S>(B, dw);
        for (std::size_t b = 0; b < B; ++b) {
            const S* src = k.win_fwd.h[W - 1].row(k.row_of[b * T + T - 1]);
            std::copy(src, src + dw, k.top.row(b));
        }
    } else {
        const bool crop = uses_crop(variant);
        const std::size_t de = crop ? static_cast<std::size_t>(d.embed_dim) : 0;
        const std::size_t drs = rs ? k.rs_out.cols : 0;
        const S* embed = crop ? params["embed"].value.ptr() : nullptr;
        k.year_x.assign(static_cast<std::size_t>(d.year_layers), {});
        auto& x0 = k.year_x[0];
        x0.assign(T, Matrix<S>(B, de + drs));
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t b = 0; b < B; ++b) {
                S* dst = x0[t].row(b);
                if (crop) {
                    const S* e = embed + static_cast<std::size_t>(batch.prev_crop[b * T + t]) * de;
                    std::copy(e, e + de, dst);
                }
                if (rs) {
                    const S* r = k.rs_out.row(k.row_of[b * T + t]);
                    std::copy(r, r + drs, dst + de);
                }
            }
        }
        k.year.clear();
        for (int l = 0; l < d.year_layers; ++l) {
            k.year.push_back(lstm_forward(lstm_weights(params, year_prefix(l)), k.year_x[l], false));
            if (l + 1 < d.year_layers) k.year_x[l + 1] = k.year.back().h;
        }
        k.top = k.year.back().h[T - 1];
    }

    const Matrix<S>* head_in = &k.top;
    if (uses_distribution(variant)) {
        const std::size_t dy = k.top.cols;
        k.fc_in = Matrix<S>(B, dy + V);
        for (std::size_t b = 0; b < B; ++b) {
            S* dst = k.fc_in.row(b);
            std::copy(k.top.row(b), k.top.row(b) + dy, dst);
            for (std::size_t j = 0; j < V; ++j) dst[dy + j] = static_cast<S>(batch.dist[b * V + j]);
        }
        k.fc1 = dense_forward(k.fc_in, params["fc1.W"].value.ptr(), params["fc1.b"].value.ptr(), dy, true);
        k.fc2 = dense_forward(k.fc1, params["fc2.W"].value.ptr(), params["fc2.b"].value.ptr(), dy, true);
        head_in = &k.fc2;
    }
    k.result.logits = dense_forward(*head_in, params["out.W"].value.ptr(), params["out.b"].value.ptr(), V, false);
    k.result.probs = softmax_rows(k.result.logits);

    if (uses_window_rnn(variant)) {
        k.result.attention.assign(B * T * W, 0.0f);
        for (std::size_t i = 0; i < B * T; ++i) {
            for (std::size_t w = 0; w < W; ++w) {
                k.result.attention[i * W + w] = static_cast<float>(k.att.weights(k.row_of[i], w));
            }
        }
    }
}

}  // namespace

template <typename S>
ForwardResult<S> forward(const ModelParams<S>& params, const SequenceBatch& batch) {
    Cache<S> cache;
    run_forward(params, batch, cache);
    return std::move(cache.result);
}

template <typename S>
S loss_and_backward(ModelParams<S>& params, const SequenceBatch& batch) {
    Cache<S> k;
    run_forward(params, batch, k);
    params.zero_grad();
    const Variant variant = params.variant();
    const ModelDims& d = params.dims();
    const std::size_t B = k.B, T = k.T, V = k.V;
    const std::size_t W = static_cast<std::size_t>(d.num_windows);
    if (batch.labels.size() != B) throw std::invalid_argument("batch labels missing");

    S loss = 0;
    Matrix<S> dlogits = k.result.probs;
    const S scale = S(1) / static_cast<S>(B);
    for (std::size_t b = 0; b < B; ++b) {
        const int y = batch.labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= V) throw std::invalid_argument("label outside the class range");
        const S* l = k.result.logits.row(b);
        const S mx = *std::max_element(l, l + V);
        S sum = 0;
        for (std::size_t j = 0; j < V; ++j) sum += std::exp(l[j] - mx);
        loss -= (l[y] - mx - std::log(sum));
        dlogits(b, static_cast<std::size_t>(y)) -= S(1);
    }
    loss *= scale;
    for (auto& v : dlogits.data) v *= scale;

    // head
    Matrix<S> dtop;
    if (uses_distribution(variant)) {
        const std::size_t dy = k.top.cols;
        Matrix<S> dfc2 = dense_backward(k.fc2, k.result.logits, dlogits, params["out.W"].value.ptr(),
                                        params["out.W"].grad.ptr(), params["out.b"].grad.ptr(), false, true);
        Matrix<S> dfc1 = dense_backward(k.fc1, k.fc2, dfc2, params["fc2.W"].value.ptr(), params["fc2.W"].grad.ptr(),
                                        params["fc2.b"].grad.ptr(), true, true);
        Matrix<S> din = dense_backward(k.fc_in, k.fc1, dfc1, params["fc1.W"].value.ptr(), params["fc1.W"].grad.ptr(),
                                       params["fc1.b"].grad.ptr(), true, true);
        dtop = Matrix<S>(B, dy);
        for (std::size_t b = 0; b < B; ++b) std::copy(din.row(b), din.row(b) + dy, dtop.row(b));
    } else {
        dtop = dense_backward(k.top, k.result.logits, dlogits, params["out.W"].value.ptr(),
                              params["out.W"].grad.ptr(), params["out.b"].grad.ptr(), false, true);
    }

    const std::size_t U = k.rows;
    Matrix<S> drs;  // gradient w.r.t. rs_out rows
    if (is_year_independent(variant)) {
        const std::size_t dw = static_cast<std::size_t>(d.window_hidden);
        std::vector<Matrix<S>> dh(W);
        dh[W - 1] = Matrix<S>(U, dw);
        for (std::size_t b = 0; b < B; ++b) {
            S* dst = dh[W - 1].row(k.row_of[b * T + T - 1]);
            const S* src = dtop.row(b);
            for (std::size_t j = 0; j < dw; ++j) dst[j] += src[j];
        }
        lstm_backward<S>(lstm_weights(params, "win_fwd"), k.win_x, k.win_fwd, dh, lstm_grads(params, "win_fwd"),
                      nullptr);
    } else {
        std::vector<Matrix<S>> dh(T);
        dh[T - 1] = dtop;
        std::vector<Matrix<S>> dxs;
        for (int l = d.year_layers - 1; l >= 0; --l) {
            const auto idx = static_cast<std::size_t>(l);
            lstm_backward<S>(lstm_weights(params, year_prefix(l)), k.year_x[idx], k.year[idx], dh,
                          lstm_grads(params, year_prefix(l)), &dxs);
            dh = std::move(dxs);
        }
        // dh now holds gradients w.r.t. the first layer's inputs
        const bool crop = uses_crop(variant);
        const std::size_t de = crop ? static_cast<std::size_t>(d.embed_dim) : 0;
        if (crop) {
            S* ge = params["embed"].grad.ptr();
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t b = 0; b < B; ++b) {
                    S* dst = ge + static_cast<std::size_t>(batch.prev_crop[b * T + t]) * de;
                    const S* src = dh[t].row(b);
                    for (std::size_t j = 0; j < de; ++j) dst[j] += src[j];
                }
            }
        }
        if (U > 0) {
            const std::size_t drs_w = k.rs_out.cols;
            drs = Matrix<S>(U, drs_w);
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t t = 0; t < T; ++t) {
                    S* dst = drs.row(k.row_of[b * T + t]);
                    const S* src = dh[t].row(b) + de;
                    for (std::size_t j = 0; j < drs_w; ++j) dst[j] += src[j];
                }
            }
        }
    }

    if (uses_flat_rs(variant)) {
        dense_backward(k.flat_x, k.rs_out, drs, params["rs.W"].value.ptr(), params["rs.W"].grad.ptr(),
                       params["rs.b"].grad.ptr(), true, false);
    }
    if (uses_window_rnn(variant)) {
        AttentionWeights<S> aw = attention_weights(params);
        AttentionGrads<S> ag{params["att.W"].grad.ptr(), params["att.b"].grad.ptr(), params["att.v"].grad.ptr()};
        std::vector<Matrix<S>> dwin;
        attention_backward(aw, k.win_h, k.att, drs, ag, dwin);
        const std::size_t dw = static_cast<std::size_t>(d.window_hidden);
        std::vector<Matrix<S>> dfwd(W, Matrix<S>(U, dw)), dbwd(W, Matrix<S>(U, dw));
        for (std::size_t w = 0; w < W; ++w) {
            for (std::size_t u = 0; u < U; ++u) {
                const S* src = dwin[w].row(u);
                std::copy(src, src + dw, dfwd[w].row(u));
                std::copy(src + dw, src + 2 * dw, dbwd[w].row(u));
            }
        }
        lstm_backward<S>(lstm_weights(params, "win_fwd"), k.win_x, k.win_fwd, dfwd, lstm_grads(params, "win_fwd"),
                      nullptr);
        lstm_backward<S>(lstm_weights(params, "win_bwd"), k.win_x, k.win_bwd, dbwd, lstm_grads(params, "win_bwd"),
                      nullptr);
    }

    if (!std::isfinite(loss)) throw NumericalError("numerical divergence");
    for (const auto& e : params.entries()) check_finite(e.grad.data);
    return loss;
}

template ForwardResult<float> forward<float>(const ModelParams<float>&, const SequenceBatch&);
template ForwardResult<double> forward<double>(const ModelParams<double>&, const SequenceBatch&);
template float loss_and_backward<float>(ModelParams<float>&, const SequenceBatch&);
template double loss_and_backward<double>(ModelParams<double>&, const SequenceBatch&);

}  // namespace cropfuse::nn
