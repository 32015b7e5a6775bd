#include "cropfuse/prep/banded.hpp"

#include <cmath>
#include <stdexcept>

namespace cropfuse::prep {

SymmetricPentadiagonal::SymmetricPentadiagonal(std::size_t n) : diag_(n, 0.0), off1_(n, 0.0), off2_(n, 0.0) {}

void SymmetricPentadiagonal::add(std::size_t i, std::size_t j, double value) {
    if (i > j) std::swap(i, j);
    if (j >= size() || j - i > 2) throw std::out_of_range("SymmetricPentadiagonal::add outside band");
    factored_ = false;
    switch (j - i) {
        case 0: diag_[i] += value; break;
        case 1: off1_[i] += value; break;
        default: off2_[i] += value; break;
    }
}

double SymmetricPentadiagonal::at(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    if (j >= size()) throw std::out_of_range("SymmetricPentadiagonal::at");
    switch (j - i) {
        case 0: return diag_[i];
        case 1: return off1_[i];
        case 2: return off2_[i];
        default: return 0.0;
    }
}

std::vector<long double> SymmetricPentadiagonal::multiply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<long double> y(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        long double acc = static_cast<long double>(diag_[i]) * x[i];
        if (i + 1 < n) acc += static_cast<long double>(off1_[i]) * x[i + 1];
        if (i + 2 < n) acc += static_cast<long double>(off2_[i]) * x[i + 2];
        if (i >= 1) acc += static_cast<long double>(off1_[i - 1]) * x[i - 1];
        if (i >= 2) acc += static_cast<long double>(off2_[i - 2]) * x[i - 2];
        y[i] = acc;
    }
    return y;
}

void SymmetricPentadiagonal::factor() const {
    if (factored_) return;
    const std::size_t n = size();
    d_.assign(n, 0.0L);
    l1_.assign(n, 0.0L);  // L(i+1, i)
    l2_.assign(n, 0.0L);  // L(i+2, i)
    for (std::size_t i = 0; i < n; ++i) {
        long double di = diag_[i];
        if (i >= 1) di -= l1_[i - 1] * l1_[i - 1] * d_[i - 1];
        if (i >= 2) di -= l2_[i - 2] * l2_[i - 2] * d_[i - 2];
        if (!(di > 0.0L) || !std::isfinite(static_cast<double>(di))) {
            throw std::domain_error("singular system: non-positive pivot at row " + std::to_string(i));
        }
        d_[i] = di;
        if (i + 1 < n) {
            long double a = off1_[i];
            if (i >= 1) a -= l2_[i - 1] * l1_[i - 1] * d_[i - 1];
            l1_[i] = a / di;
        }
        if (i + 2 < n) l2_[i] = off2_[i] / di;
    }
    factored_ = true;
}

void SymmetricPentadiagonal::substitute(std::span<const long double> rhs, std::span<long double> x) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        long double v = rhs[i];
        if (i >= 1) v -= l1_[i - 1] * x[i - 1];
        if (i >= 2) v -= l2_[i - 2] * x[i - 2];
        x[i] = v;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= d_[i];
    for (std::size_t k = n; k-- > 0;) {
        long double v = x[k];
        if (k + 1 < n) v -= l1_[k] * x[k + 1];
        if (k + 2 < n) v -= l2_[k] * x[k + 2];
        x[k] = v;
    }
}

std::vector<double> SymmetricPentadiagonal::solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw std::invalid_argument("SymmetricPentadiagonal::solve: size mismatch");
    factor();
    std::vector<long double> rhs(b.begin(), b.end());
    std::vector<long double> xl(n);
    substitute(rhs, xl);
    std::vector<double> x(xl.begin(), xl.end());

    // refinement: residual of the rounded solution, corrected once
    const auto ax = multiply(x);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = static_cast<long double>(b[i]) - ax[i];
    std::vector<long double> dx(n);
    substitute(rhs, dx);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(static_cast<long double>(x[i]) + dx[i]);
    return x;
}

}  // namespace cropfuse::prep
