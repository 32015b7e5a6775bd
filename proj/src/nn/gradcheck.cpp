#include "cropfuse/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cropfuse::nn {

ModelDims tiny_dims() {
    ModelDims d;
    d.num_classes = 6;
    d.embed_dim = 4;
    d.rs_dim = 4;
    d.window_hidden = 3;
    d.attention_dim = 3;
    d.year_hidden = 5;
    d.year_layers = 1;
    d.num_windows = 3;
    d.window_features = 4;
    return d;
}

SequenceBatch random_batch(const ModelDims& dims, std::size_t elements, std::size_t steps, std::uint64_t seed,
                           std::vector<std::vector<float>>& storage) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto V = static_cast<std::size_t>(dims.num_classes);
    std::uniform_int_distribution<int> code(0, dims.num_classes);  // includes UNKNOWN
    std::uniform_int_distribution<int> label(0, dims.num_classes - 1);
    SequenceBatch batch;
    batch.resize(elements, steps, V);
    storage.clear();
    storage.reserve(elements * steps);
    for (std::size_t b = 0; b < elements; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
            batch.prev_crop[b * steps + t] = code(rng);
            if (t == 0 && b % 2 == 0) continue;  // zero placeholder
            std::vector<float> f(static_cast<std::size_t>(dims.feature_length()));
            for (auto& v : f) v = static_cast<float>(unit(rng));
            storage.push_back(std::move(f));
            batch.features[b * steps + t] = storage.back().data();
        }
        double total = 0;
        for (std::size_t j = 0; j < V; ++j) {
            const double p = 0.5 * (unit(rng) + 1.0);
            batch.dist[b * V + j] = static_cast<float>(p);
            total += p;
        }
        for (std::size_t j = 0; j < V; ++j) batch.dist[b * V + j] = static_cast<float>(batch.dist[b * V + j] / total);
        batch.labels[b] = label(rng);
    }
    return batch;
}

double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradcheckResult gradcheck(Variant variant, const ModelDims& dims, std::uint64_t seed, double eps, double jitter) {
    ModelParams<double> params = init_params<double>(variant, dims, seed);
    if (jitter > 0) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> noise(-jitter, jitter);
        for (auto& p : params.entries()) {
            for (auto& v : p.value.data) v += noise(rng);
        }
    }
    std::vector<std::vector<float>> storage;
    const SequenceBatch batch = random_batch(dims, 3, 3, seed + 1, storage);
    loss_and_backward(params, batch);
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params.entries()) analytic.push_back(p.grad.data);

    GradcheckResult res;
    res.variant = variant;
    for (std::size_t k = 0; k < params.entries().size(); ++k) {
        auto& p = params.entries()[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double orig = p.value.data[i];
            p.value.data[i] = orig + eps;
            const double up = loss_and_backward(params, batch);
            p.value.data[i] = orig - eps;
            const double down = loss_and_backward(params, batch);
            p.value.data[i] = orig;
            const double fd = (up - down) / (2.0 * eps);
            const double err = relative_error(analytic[k][i], fd);
            ++res.checked;
            if (err < 1e-4) ++res.below_tight;
            if (err > res.max_rel_err) {
                res.max_rel_err = err;
                res.worst = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return res;
}

}  // namespace cropfuse::nn
