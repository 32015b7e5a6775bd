#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cropfuse/nn/model.hpp"

namespace cropfuse::nn {

/// V = 6, d_e = 4, d_w = 3, d_y = 5, 3 windows of 4 features.
ModelDims tiny_dims();

/// Random batch for `dims`: elements x steps histories with some zero RS
/// placeholders, random distributions and labels. `storage` keeps the
/// feature blocks alive.
SequenceBatch random_batch(const ModelDims& dims, std::size_t elements, std::size_t steps, std::uint64_t seed,
                           std::vector<std::vector<float>>& storage);

struct GradcheckResult {
    Variant variant = Variant::Final;
    std::size_t checked = 0;
    std::size_t below_tight = 0;  // rel err < 1e-4
    double max_rel_err = 0.0;
    std::string worst;  // "name[index]"

    double tight_fraction() const { return checked ? static_cast<double>(below_tight) / checked : 1.0; }
    bool passed() const { return tight_fraction() >= 0.99 && max_rel_err < 1e-2; }
};

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Compares backprop gradients with central differences (step eps) on
/// every scalar parameter, in double precision. The check point is the
/// seeded initialization plus uniform(-jitter, jitter) noise per weight;
/// at the raw initialization many gradients sit near 1e-8, where the
/// difference quotient is dominated by rounding.
GradcheckResult gradcheck(Variant variant, const ModelDims& dims, std::uint64_t seed, double eps = 1e-5,
                          double jitter = 0.5);

}  // namespace cropfuse::nn
