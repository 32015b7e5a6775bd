#pragma once

#include <span>
#include <vector>

namespace cropfuse::prep {

/// Solves (diag(w) + lambda * D^T D) z = diag(w) y with D the second
/// difference operator. Requires n >= 3, lambda >= 0 and some w > 0.
std::vector<double> whittaker_smooth(std::span<const double> y, std::span<const double> w, double lambda);

/// Sum of w (y - z)^2.
double fidelity(std::span<const double> y, std::span<const double> w, std::span<const double> z);
/// Sum of squared second differences of z.
double roughness(std::span<const double> z);

struct VCurveGrid {
    double log10_min = -2.0;
    double log10_max = 8.0;
    double log10_step = 0.5;

    std::vector<double> lambdas() const;
};

/// V-curve choice of lambda: along the grid, the consecutive pair whose
/// (log fidelity, log roughness) points are closest; returns the pair's
/// geometric mean. Ties go to the smaller lambda. A constant signal (over
/// the weighted points) returns the smallest grid lambda.
double vcurve_lambda(std::span<const double> y, std::span<const double> w, const VCurveGrid& grid = {});

}  // namespace cropfuse::prep
