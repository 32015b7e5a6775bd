#include "cropfuse/prep/whittaker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cropfuse/prep/banded.hpp"

namespace cropfuse::prep {

std::vector<double> whittaker_smooth(std::span<const double> y, std::span<const double> w, double lambda) {
    const std::size_t n = y.size();
    if (w.size() != n) throw std::invalid_argument("whittaker_smooth: length mismatch");
    if (n < 3) throw std::invalid_argument("whittaker_smooth: need at least 3 points");
    if (!(lambda >= 0.0)) throw std::invalid_argument("whittaker_smooth: lambda must be >= 0");
    if (std::none_of(w.begin(), w.end(), [](double v) { return v > 0.0; })) {
        throw std::invalid_argument("whittaker_smooth: all weights are zero");
    }

    SymmetricPentadiagonal a(n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        a.add(i, i, w[i]);
        rhs[i] = w[i] * y[i];
    }
    if (lambda > 0.0) {
        constexpr double c[3] = {1.0, -2.0, 1.0};
        for (std::size_t r = 0; r + 2 < n; ++r) {
            for (std::size_t p = 0; p < 3; ++p) {
                for (std::size_t q = p; q < 3; ++q) a.add(r + p, r + q, lambda * c[p] * c[q]);
            }
        }
    }
    return a.solve(rhs);
}

double fidelity(std::span<const double> y, std::span<const double> w, std::span<const double> z) {
    double f = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) f += w[i] * (y[i] - z[i]) * (y[i] - z[i]);
    return f;
}

double roughness(std::span<const double> z) {
    double r = 0.0;
    for (std::size_t i = 0; i + 2 < z.size(); ++i) {
        const double d2 = z[i] - 2.0 * z[i + 1] + z[i + 2];
        r += d2 * d2;
    }
    return r;
}

std::vector<double> VCurveGrid::lambdas() const {
    if (!(log10_step > 0.0) || log10_max < log10_min) throw std::invalid_argument("invalid V-curve grid");
    const auto count = static_cast<std::size_t>(std::llround((log10_max - log10_min) / log10_step)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::pow(10.0, log10_min + log10_step * static_cast<double>(i));
    return out;
}

double vcurve_lambda(std::span<const double> y, std::span<const double> w, const VCurveGrid& grid) {
    const auto lambdas = grid.lambdas();
    if (lambdas.size() < 3) throw std::invalid_argument("vcurve_lambda: grid needs at least 3 points");

    bool constant = true;
    double first = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(w[i] > 0.0)) continue;
        if (std::isnan(first)) first = y[i];
        else if (y[i] != first) { constant = false; break; }
    }
    if (constant) return lambdas.front();

    constexpr double kFloor = std::numeric_limits<double>::min();
    std::vector<double> log_f(lambdas.size()), log_r(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const auto z = whittaker_smooth(y, w, lambdas[i]);
        log_f[i] = std::log(std::max(fidelity(y, w, z), kFloor));
        log_r[i] = std::log(std::max(roughness(z), kFloor));
    }
    std::size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
        const double v = std::hypot(log_f[i + 1] - log_f[i], log_r[i + 1] - log_r[i]);
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    return std::sqrt(lambdas[best] * lambdas[best + 1]);
}

}  // namespace cropfuse::prep
