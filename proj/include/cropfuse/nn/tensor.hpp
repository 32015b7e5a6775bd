#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "cropfuse/util/errors.hpp"

namespace cropfuse::nn {

/// Dense row-major array with an explicit shape.
template <typename S>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<S> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims, S fill = S(0))
        : shape(std::move(dims)),
          data(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>()), fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.empty() ? 1 : size() / shape[0]; }
    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }
};

/// Activation matrix used inside layers (rows = batch elements).
template <typename S>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<S> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, S fill = S(0)) : rows(r), cols(c), data(r * c, fill) {}

    bool empty() const { return data.empty(); }
    S* row(std::size_t i) { return data.data() + i * cols; }
    const S* row(std::size_t i) const { return data.data() + i * cols; }
    S& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    S operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Kernels below accumulate every output element over the inner dimension
// in ascending order, independent of the number of rows, so a row's result
// does not depend on which batch it was computed in.

/// out (n x m) += a (n x k) * b (k x m)
template <typename S>
void gemm_acc(const S* a, std::size_t n, std::size_t k, const S* b, std::size_t m, S* out) {
    for (std::size_t i = 0; i < n; ++i) {
        S* o = out + i * m;
        const S* ar = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const S av = ar[p];
            if (av == S(0)) continue;
            const S* br = b + p * m;
            for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
        }
    }
}

/// out (k x m) += a^T (a: n x k) * d (n x m)
template <typename S>
void gemm_tn_acc(const S* a, std::size_t n, std::size_t k, const S* d, std::size_t m, S* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const S* ar = a + i * k;
        const S* dr = d + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const S av = ar[p];
            if (av == S(0)) continue;
            S* o = out + p * m;
            for (std::size_t j = 0; j < m; ++j) o[j] += av * dr[j];
        }
    }
}

template <typename S>
std::vector<S> transpose(const S* b, std::size_t k, std::size_t m) {
    std::vector<S> t(k * m);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t j = 0; j < m; ++j) t[j * k + p] = b[p * m + j];
    }
    return t;
}

/// out[j] += sum_i d(i, j)
template <typename S>
void colsum_acc(const Matrix<S>& d, S* out) {
    for (std::size_t i = 0; i < d.rows; ++i) {
        const S* r = d.row(i);
        for (std::size_t j = 0; j < d.cols; ++j) out[j] += r[j];
    }
}

template <typename S>
void check_finite(const std::vector<S>& v) {
    for (const S x : v) {
        if (!std::isfinite(x)) throw NumericalError("numerical divergence");
    }
}

template <typename S>
inline S sigmoid(S x) {
    const S clamped = x < S(-40) ? S(-40) : (x > S(40) ? S(40) : x);
    return S(1) / (S(1) + std::exp(-clamped));
}

}  // namespace cropfuse::nn
