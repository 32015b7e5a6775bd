#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cropfuse/nn/tensor.hpp"

namespace cropfuse::nn {

enum class Variant : std::uint8_t { LstmCrop, LstmYI, LstmRS, HierBiLstmRS, LstmMM, HierBiLstmMM, Final };

inline constexpr Variant kAllVariants[] = {Variant::LstmCrop,     Variant::LstmYI, Variant::LstmRS,
                                           Variant::HierBiLstmRS, Variant::LstmMM, Variant::HierBiLstmMM,
                                           Variant::Final};

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

bool uses_crop(Variant v);
bool uses_flat_rs(Variant v);      // f_rs over the flattened season block
bool uses_window_rnn(Variant v);   // biLSTM + attention over windows
bool uses_distribution(Variant v);
bool is_year_independent(Variant v);

struct ModelDims {
    int num_classes = 0;  // V; the embedding has V + 1 rows (UNKNOWN = V)
    int embed_dim = 64;
    int rs_dim = 128;
    int window_hidden = 128;  // per direction
    int attention_dim = 128;
    int year_hidden = 256;
    int year_layers = 1;
    int num_windows = 25;
    int window_features = 28;

    int feature_length() const { return num_windows * window_features; }
    bool operator==(const ModelDims&) const = default;
};

template <typename S>
struct Parameter {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;
};

/// Named parameter tensors of one architecture variant, each with a
/// same-shaped gradient buffer.
template <typename S>
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(Variant variant, ModelDims dims) : variant_(variant), dims_(dims) {}

    Variant variant() const { return variant_; }
    const ModelDims& dims() const { return dims_; }

    Parameter<S>& add(std::string name, std::vector<std::size_t> shape);
    std::size_t index(std::string_view name) const;
    bool contains(std::string_view name) const;

    Parameter<S>& operator[](std::string_view name) { return entries_[index(name)]; }
    const Parameter<S>& operator[](std::string_view name) const { return entries_[index(name)]; }

    std::vector<Parameter<S>>& entries() { return entries_; }
    const std::vector<Parameter<S>>& entries() const { return entries_; }
    std::size_t scalar_count() const;
    void zero_grad();

    /// Same parameters in another precision (gradients zeroed).
    template <typename T>
    ModelParams<T> cast() const {
        ModelParams<T> out(variant_, dims_);
        for (const auto& e : entries_) {
            auto& p = out.add(e.name, e.value.shape);
            for (std::size_t i = 0; i < e.value.size(); ++i) p.value.data[i] = static_cast<T>(e.value.data[i]);
        }
        return out;
    }

private:
    Variant variant_ = Variant::Final;
    ModelDims dims_;
    std::vector<Parameter<S>> entries_;
};

/// Builds the parameter set of `variant`: uniform(-1/sqrt(fan_in),
/// 1/sqrt(fan_in)) weights with fan_in = rows of the matrix, zero biases
/// except LSTM forget gates at 1.0. Deterministic in `seed`.
template <typename S>
ModelParams<S> init_params(Variant variant, const ModelDims& dims, std::uint64_t seed);

/// Validates that `params` has exactly the tensors and shapes its variant
/// and dims require. Throws std::invalid_argument on mismatch.
template <typename S>
void validate_params(const ModelParams<S>& params);

}  // namespace cropfuse::nn
