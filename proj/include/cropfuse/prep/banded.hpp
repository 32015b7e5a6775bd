#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cropfuse::prep {

/// Symmetric positive-definite matrix with two off-diagonals, factored as
/// L D L^T with unit lower-triangular L of bandwidth 2.
class SymmetricPentadiagonal {
public:
    explicit SymmetricPentadiagonal(std::size_t n);

    std::size_t size() const { return diag_.size(); }
    /// Adds `value` to A(i, j) for |i - j| <= 2 (and its mirror).
    void add(std::size_t i, std::size_t j, double value);
    double at(std::size_t i, std::size_t j) const;

    /// A x evaluated in extended precision.
    std::vector<long double> multiply(std::span<const double> x) const;

    /// Solves A x = b. One step of iterative refinement with an
    /// extended-precision residual. Throws std::domain_error when a pivot
    /// is not positive (matrix singular or indefinite).
    std::vector<double> solve(std::span<const double> b) const;

private:
    void factor() const;
    void substitute(std::span<const long double> rhs, std::span<long double> x) const;

    std::vector<double> diag_, off1_, off2_;
    mutable bool factored_ = false;
    mutable std::vector<long double> d_, l1_, l2_;
};

}  // namespace cropfuse::prep
