#include "cropfuse/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace cropfuse::nn {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::LstmCrop: return "LSTM_Crop";
        case Variant::LstmYI: return "LSTM_YI";
        case Variant::LstmRS: return "LSTM_RS";
        case Variant::HierBiLstmRS: return "HierbiLSTM_RS";
        case Variant::LstmMM: return "LSTM_MM";
        case Variant::HierBiLstmMM: return "HierbiLSTM_MM";
        case Variant::Final: return "Final";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : kAllVariants) {
        if (variant_name(v) == name) return v;
    }
    throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

bool uses_crop(Variant v) {
    return v == Variant::LstmCrop || v == Variant::LstmMM || v == Variant::HierBiLstmMM || v == Variant::Final;
}
bool uses_flat_rs(Variant v) { return v == Variant::LstmRS || v == Variant::LstmMM; }
bool uses_window_rnn(Variant v) {
    return v == Variant::HierBiLstmRS || v == Variant::HierBiLstmMM || v == Variant::Final;
}
bool uses_distribution(Variant v) { return v == Variant::Final; }
bool is_year_independent(Variant v) { return v == Variant::LstmYI; }

template <typename S>
Parameter<S>& ModelParams<S>::add(std::string name, std::vector<std::size_t> shape) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
    Parameter<S> p{std::move(name), Tensor<S>(shape), Tensor<S>(shape)};
    entries_.push_back(std::move(p));
    return entries_.back();
}

template <typename S>
std::size_t ModelParams<S>::index(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    throw std::invalid_argument("missing parameter " + std::string(name));
}

template <typename S>
bool ModelParams<S>::contains(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

template <typename S>
std::size_t ModelParams<S>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

template <typename S>
void ModelParams<S>::zero_grad() {
    for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), S(0));
}

namespace {

struct Slot {
    std::string name;
    std::vector<std::size_t> shape;
    enum class Kind { Weight, Bias, LstmBias } kind;
};

std::vector<Slot> layout(Variant variant, const ModelDims& d) {
    if (d.num_classes < 2 || d.embed_dim < 1 || d.rs_dim < 1 || d.window_hidden < 1 || d.attention_dim < 1 ||
        d.year_hidden < 1 || d.year_layers < 1 || d.num_windows < 1 || d.window_features < 1) {
        throw std::invalid_argument("invalid model dims");
    }
    using K = Slot::Kind;
    const auto z = [](int v) { return static_cast<std::size_t>(v); };
    const std::size_t V = z(d.num_classes), de = z(d.embed_dim), drs = z(d.rs_dim), dw = z(d.window_hidden),
                      da = z(d.attention_dim), dy = z(d.year_hidden), fw = z(d.window_features),
                      flat = z(d.feature_length());
    std::vector<Slot> out;
    const auto lstm = [&](const std::string& prefix, std::size_t in, std::size_t h) {
        out.push_back({prefix + ".Wx", {in, 4 * h}, K::Weight});
        out.push_back({prefix + ".Wh", {h, 4 * h}, K::Weight});
        out.push_back({prefix + ".b", {4 * h}, K::LstmBias});
    };
    if (uses_crop(variant)) out.push_back({"embed", {V + 1, de}, K::Weight});
    if (uses_flat_rs(variant)) {
        out.push_back({"rs.W", {flat, drs}, K::Weight});
        out.push_back({"rs.b", {drs}, K::Bias});
    }
    if (uses_window_rnn(variant) || is_year_independent(variant)) lstm("win_fwd", fw, dw);
    if (uses_window_rnn(variant)) {
        lstm("win_bwd", fw, dw);
        out.push_back({"att.W", {2 * dw, da}, K::Weight});
        out.push_back({"att.b", {da}, K::Bias});
        out.push_back({"att.v", {da}, K::Weight});
    }
    if (!is_year_independent(variant)) {
        std::size_t in = (uses_crop(variant) ? de : 0) + (uses_flat_rs(variant) ? drs : 0) +
                         (uses_window_rnn(variant) ? 2 * dw : 0);
        for (int l = 0; l < d.year_layers; ++l) {
            lstm("year" + std::to_string(l), in, dy);
            in = dy;
        }
    }
    if (uses_distribution(variant)) {
        out.push_back({"fc1.W", {dy + V, dy}, K::Weight});
        out.push_back({"fc1.b", {dy}, K::Bias});
        out.push_back({"fc2.W", {dy, dy}, K::Weight});
        out.push_back({"fc2.b", {dy}, K::Bias});
    }
    out.push_back({"out.W", {is_year_independent(variant) ? dw : dy, V}, K::Weight});
    out.push_back({"out.b", {V}, K::Bias});
    return out;
}

}  // namespace

template <typename S>
ModelParams<S> init_params(Variant variant, const ModelDims& dims, std::uint64_t seed) {
    ModelParams<S> params(variant, dims);
    std::mt19937_64 rng(seed);
    for (const auto& slot : layout(variant, dims)) {
        auto& p = params.add(slot.name, slot.shape);
        switch (slot.kind) {
            case Slot::Kind::Weight: {
                const double bound = 1.0 / std::sqrt(static_cast<double>(slot.shape[0]));
                std::uniform_real_distribution<double> dist(-bound, bound);
                for (auto& v : p.value.data) v = static_cast<S>(dist(rng));
                break;
            }
            case Slot::Kind::Bias: break;
            case Slot::Kind::LstmBias: {
                // gate blocks [input | forget | candidate | output]
                const std::size_t h = slot.shape[0] / 4;
                for (std::size_t j = h; j < 2 * h; ++j) p.value.data[j] = S(1);
                break;
            }
        }
    }
    return params;
}

template <typename S>
void validate_params(const ModelParams<S>& params) {
    const auto expected = layout(params.variant(), params.dims());
    if (expected.size() != params.entries().size()) {
        throw std::invalid_argument("parameter set does not match variant " +
                                    std::string(variant_name(params.variant())));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& e = params.entries()[i];
        if (e.name != expected[i].name || e.value.shape != expected[i].shape || e.grad.shape != e.value.shape) {
            throw std::invalid_argument("parameter " + e.name + " does not match variant " +
                                        std::string(variant_name(params.variant())));
        }
    }
}

template class ModelParams<float>;
template class ModelParams<double>;
template ModelParams<float> init_params<float>(Variant, const ModelDims&, std::uint64_t);
template ModelParams<double> init_params<double>(Variant, const ModelDims&, std::uint64_t);
template void validate_params<float>(const ModelParams<float>&);
template void validate_params<double>(const ModelParams<double>&);

}  // namespace cropfuse::nn
