#include "cropfuse/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace cropfuse::nn {

namespace {

template <typename S>
void lstm_step(const LstmWeights<S>& w, const Matrix<S>& x, const Matrix<S>* h_prev, const Matrix<S>* c_prev,
               Matrix<S>& gates, Matrix<S>& c, Matrix<S>& tanh_c, Matrix<S>& h) {
    const std::size_t rows = x.rows, hd = w.hidden, g4 = 4 * hd;
    gates = Matrix<S>(rows, g4);
    for (std::size_t r = 0; r < rows; ++r) std::copy(w.b, w.b + g4, gates.row(r));
    gemm_acc(x.data.data(), rows, w.in, w.wx, g4, gates.data.data());
    if (h_prev) gemm_acc(h_prev->data.data(), rows, hd, w.wh, g4, gates.data.data());
    c = Matrix<S>(rows, hd);
    tanh_c = Matrix<S>(rows, hd);
    h = Matrix<S>(rows, hd);
    for (std::size_t r = 0; r < rows; ++r) {
        S* a = gates.row(r);
        for (std::size_t j = 0; j < hd; ++j) {
            const S i = sigmoid(a[j]);
            const S f = sigmoid(a[hd + j]);
            const S g = std::tanh(a[2 * hd + j]);
            const S o = sigmoid(a[3 * hd + j]);
            a[j] = i;
            a[hd + j] = f;
            a[2 * hd + j] = g;
            a[3 * hd + j] = o;
            const S cp = c_prev ? (*c_prev)(r, j) : S(0);
            const S cv = f * cp + i * g;
            const S tc = std::tanh(cv);
            c(r, j) = cv;
            tanh_c(r, j) = tc;
            h(r, j) = o * tc;
        }
    }
    check_finite(h.data);
}

}  // namespace

template <typename S>
void lstm_cell(const LstmWeights<S>& w, const Matrix<S>& x, Matrix<S>& h, Matrix<S>& c) {
    Matrix<S> gates, c_new, tanh_c, h_new;
    lstm_step(w, x, &h, &c, gates, c_new, tanh_c, h_new);
    h = std::move(h_new);
    c = std::move(c_new);
}

template <typename S>
LstmTrace<S> lstm_forward(const LstmWeights<S>& w, const std::vector<Matrix<S>>& xs, bool reverse) {
    const std::size_t T = xs.size();
    LstmTrace<S> tr;
    tr.reverse = reverse;
    tr.gates.resize(T);
    tr.c.resize(T);
    tr.tanh_c.resize(T);
    tr.h.resize(T);
    for (std::size_t s = 0; s < T; ++s) {
        const std::size_t t = reverse ? T - 1 - s : s;
        const bool first = s == 0;
        const std::size_t p = reverse ? t + 1 : t - 1;
        lstm_step(w, xs[t], first ? nullptr : &tr.h[p], first ? nullptr : &tr.c[p], tr.gates[t], tr.c[t],
                  tr.tanh_c[t], tr.h[t]);
    }
    return tr;
}

template <typename S>
void lstm_backward(const LstmWeights<S>& w, const std::vector<Matrix<S>>& xs, const LstmTrace<S>& tr,
                   const std::vector<Matrix<S>>& dh, const LstmGrads<S>& grads, std::vector<Matrix<S>>* dxs) {
    const std::size_t T = xs.size();
    if (T == 0) return;
    const std::size_t rows = xs[0].rows, hd = w.hidden, g4 = 4 * hd;
    const std::vector<S> wx_t = transpose(w.wx, w.in, g4);
    const std::vector<S> wh_t = transpose(w.wh, hd, g4);
    Matrix<S> dh_next(rows, hd), dc_next(rows, hd), da(rows, g4);
    if (dxs) dxs->assign(T, Matrix<S>());
    for (std::size_t s = T; s-- > 0;) {
        const std::size_t t = tr.reverse ? T - 1 - s : s;
        const bool first = s == 0;
        const std::size_t p = tr.reverse ? t + 1 : t - 1;
        const Matrix<S>& gates = tr.gates[t];
        for (std::size_t r = 0; r < rows; ++r) {
            const S* a = gates.row(r);
            S* d = da.row(r);
            for (std::size_t j = 0; j < hd; ++j) {
                const S i = a[j], f = a[hd + j], g = a[2 * hd + j], o = a[3 * hd + j];
                S dhv = dh_next(r, j);
                if (!dh[t].empty()) dhv += dh[t](r, j);
                const S tc = tr.tanh_c[t](r, j);
                const S dc = dhv * o * (S(1) - tc * tc) + dc_next(r, j);
                const S cp = first ? S(0) : tr.c[p](r, j);
                d[j] = dc * g * i * (S(1) - i);
                d[hd + j] = dc * cp * f * (S(1) - f);
                d[2 * hd + j] = dc * i * (S(1) - g * g);
                d[3 * hd + j] = dhv * tc * o * (S(1) - o);
                dc_next(r, j) = dc * f;
            }
        }
        gemm_tn_acc(xs[t].data.data(), rows, w.in, da.data.data(), g4, grads.wx);
        if (!first) gemm_tn_acc(tr.h[p].data.data(), rows, hd, da.data.data(), g4, grads.wh);
        colsum_acc(da, grads.b);
        if (dxs) {
            Matrix<S>& dx = (*dxs)[t];
            dx = Matrix<S>(rows, w.in);
            gemm_acc(da.data.data(), rows, g4, wx_t.data(), w.in, dx.data.data());
        }
        std::fill(dh_next.data.begin(), dh_next.data.end(), S(0));
        if (!first) gemm_acc(da.data.data(), rows, g4, wh_t.data(), hd, dh_next.data.data());
    }
}

template <typename S>
AttentionTrace<S> attention_forward(const AttentionWeights<S>& w, const std::vector<Matrix<S>>& hs) {
    const std::size_t P = hs.size();
    const std::size_t rows = P ? hs[0].rows : 0;
    AttentionTrace<S> tr;
    tr.act.resize(P);
    tr.weights = Matrix<S>(rows, P);
    for (std::size_t t = 0; t < P; ++t) {
        tr.act[t] = dense_forward(hs[t], w.w, w.b, w.att, true);
        for (std::size_t r = 0; r < rows; ++r) {
            const S* a = tr.act[t].row(r);
            S e = 0;
            for (std::size_t k = 0; k < w.att; ++k) e += w.v[k] * a[k];
            tr.weights(r, t) = e;
        }
    }
    tr.weights = softmax_rows(tr.weights);
    tr.out = Matrix<S>(rows, w.dim);
    for (std::size_t r = 0; r < rows; ++r) {
        S* o = tr.out.row(r);
        for (std::size_t t = 0; t < P; ++t) {
            const S u = tr.weights(r, t);
            const S* h = hs[t].row(r);
            for (std::size_t k = 0; k < w.dim; ++k) o[k] += u * h[k];
        }
    }
    return tr;
}

template <typename S>
void attention_backward(const AttentionWeights<S>& w, const std::vector<Matrix<S>>& hs, const AttentionTrace<S>& tr,
                        const Matrix<S>& dout, const AttentionGrads<S>& grads, std::vector<Matrix<S>>& dhs) {
    const std::size_t P = hs.size();
    const std::size_t rows = dout.rows;
    // du_t = dout . h_t ; de_t = u_t (du_t - sum_s u_s du_s)
    Matrix<S> de(rows, P);
    for (std::size_t r = 0; r < rows; ++r) {
        const S* g = dout.row(r);
        S mean = 0;
        for (std::size_t t = 0; t < P; ++t) {
            const S* h = hs[t].row(r);
            S du = 0;
            for (std::size_t k = 0; k < w.dim; ++k) du += g[k] * h[k];
            de(r, t) = du;
            mean += tr.weights(r, t) * du;
        }
        for (std::size_t t = 0; t < P; ++t) de(r, t) = tr.weights(r, t) * (de(r, t) - mean);
    }
    dhs.assign(P, Matrix<S>());
    for (std::size_t t = 0; t < P; ++t) {
        Matrix<S> dact(rows, w.att);
        for (std::size_t r = 0; r < rows; ++r) {
            const S* a = tr.act[t].row(r);
            for (std::size_t k = 0; k < w.att; ++k) {
                grads.v[k] += de(r, t) * a[k];
                dact(r, k) = de(r, t) * w.v[k];
            }
        }
        dhs[t] = dense_backward(hs[t], tr.act[t], dact, w.w, grads.w, grads.b, true, true);
        for (std::size_t r = 0; r < rows; ++r) {
            const S u = tr.weights(r, t);
            const S* g = dout.row(r);
            S* d = dhs[t].row(r);
            for (std::size_t k = 0; k < w.dim; ++k) d[k] += u * g[k];
        }
    }
}

template <typename S>
Matrix<S> dense_forward(const Matrix<S>& x, const S* w, const S* b, std::size_t out, bool activate) {
    Matrix<S> y(x.rows, out);
    for (std::size_t r = 0; r < x.rows; ++r) std::copy(b, b + out, y.row(r));
    gemm_acc(x.data.data(), x.rows, x.cols, w, out, y.data.data());
    if (activate) {
        for (auto& v : y.data) v = std::tanh(v);
    }
    check_finite(y.data);
    return y;
}

template <typename S>
Matrix<S> dense_backward(const Matrix<S>& x, const Matrix<S>& y, const Matrix<S>& dy, const S* w, S* gw, S* gb,
                         bool activate, bool need_dx) {
    Matrix<S> dz = dy;
    if (activate) {
        for (std::size_t i = 0; i < dz.data.size(); ++i) dz.data[i] *= S(1) - y.data[i] * y.data[i];
    }
    gemm_tn_acc(x.data.data(), x.rows, x.cols, dz.data.data(), dz.cols, gw);
    colsum_acc(dz, gb);
    if (!need_dx) return {};
    Matrix<S> dx(x.rows, x.cols);
    const std::vector<S> wt = transpose(w, x.cols, dz.cols);
    gemm_acc(dz.data.data(), dz.rows, dz.cols, wt.data(), x.cols, dx.data.data());
    return dx;
}

template <typename S>
Matrix<S> softmax_rows(const Matrix<S>& logits) {
    Matrix<S> p(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const S* l = logits.row(r);
        S* o = p.row(r);
        const S mx = *std::max_element(l, l + logits.cols);
        S sum = 0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            o[j] = std::exp(l[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) o[j] /= sum;
    }
    return p;
}

#define CROPFUSE_LAYERS(S)                                                                                          \
    template void lstm_cell<S>(const LstmWeights<S>&, const Matrix<S>&, Matrix<S>&, Matrix<S>&);                  \
    template LstmTrace<S> lstm_forward<S>(const LstmWeights<S>&, const std::vector<Matrix<S>>&, bool);            \
    template void lstm_backward<S>(const LstmWeights<S>&, const std::vector<Matrix<S>>&, const LstmTrace<S>&,     \
                                   const std::vector<Matrix<S>>&, const LstmGrads<S>&, std::vector<Matrix<S>>*); \
    template AttentionTrace<S> attention_forward<S>(const AttentionWeights<S>&, const std::vector<Matrix<S>>&);   \
    template void attention_backward<S>(const AttentionWeights<S>&, const std::vector<Matrix<S>>&,                \
                                        const AttentionTrace<S>&, const Matrix<S>&, const AttentionGrads<S>&,     \
                                        std::vector<Matrix<S>>&);                                                 \
    template Matrix<S> dense_forward<S>(const Matrix<S>&, const S*, const S*, std::size_t, bool);                 \
    template Matrix<S> dense_backward<S>(const Matrix<S>&, const Matrix<S>&, const Matrix<S>&, const S*, S*, S*,  \
                                         bool, bool);                                                             \
    template Matrix<S> softmax_rows<S>(const Matrix<S>&);

CROPFUSE_LAYERS(float)
CROPFUSE_LAYERS(double)

}  // namespace cropfuse::nn
