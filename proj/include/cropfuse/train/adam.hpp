#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cropfuse/nn/params.hpp"

namespace cropfuse::train {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moments per parameter tensor plus the step count.
template <typename S>
struct AdamState {
    std::uint64_t step = 0;
    std::vector<std::vector<S>> m;
    std::vector<std::vector<S>> v;

    explicit AdamState(const nn::ModelParams<S>& params = {}) {
        for (const auto& p : params.entries()) {
            m.emplace_back(p.value.size(), S(0));
            v.emplace_back(p.value.size(), S(0));
        }
    }
};

/// One bias-corrected Adam update from the gradients held in `params`.
template <typename S>
void adam_step(nn::ModelParams<S>& params, AdamState<S>& state, const AdamConfig& cfg = {}) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
    for (std::size_t k = 0; k < params.entries().size(); ++k) {
        auto& p = params.entries()[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const S g = p.grad.data[i];
            m[i] = b1 * m[i] + (S(1) - b1) * g;
            v[i] = b2 * v[i] + (S(1) - b2) * g * g;
            const double mhat = static_cast<double>(m[i]) / c1;
            const double vhat = static_cast<double>(v[i]) / c2;
            p.value.data[i] -= static_cast<S>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace cropfuse::train
