#include "cropfuse/nn/checkpoint.hpp"

#include <fstream>
#include <string>

#include "cropfuse/util/binio.hpp"

namespace cropfuse::nn {

namespace {

constexpr std::uint16_t kVersion = 1;

void write_tensor(std::ostream& out, const std::string& name, const Tensor<float>& t) {
    binio::write_string(out, name);
    binio::write_uint<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (auto e : t.shape) binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    for (float v : t.data) binio::write_f32(out, v);
}

std::pair<std::string, Tensor<float>> read_tensor(std::istream& in) {
    std::string name = binio::read_string(in);
    const auto rank = binio::read_uint<std::uint8_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = binio::read_uint<std::uint32_t>(in);
    Tensor<float> t(shape);
    for (auto& v : t.data) v = binio::read_f32(in);
    return {std::move(name), std::move(t)};
}

void write_list(std::ostream& out, const ModelParams<float>& params, const std::vector<Tensor<float>>& list) {
    binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) write_tensor(out, params.entries()[i].name, list[i]);
}

std::vector<Tensor<float>> read_list(std::istream& in, const ModelParams<float>& params) {
    const auto n = binio::read_uint<std::uint32_t>(in);
    if (n != params.entries().size()) throw DataError("checkpoint state does not match its parameters");
    std::vector<Tensor<float>> list;
    for (std::uint32_t i = 0; i < n; ++i) {
        auto [name, t] = read_tensor(in);
        const auto& p = params.entries()[i];
        if (name != p.name || t.shape != p.value.shape) {
            throw DataError("checkpoint state tensor " + name + " does not match its parameter");
        }
        list.push_back(std::move(t));
    }
    return list;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    validate_params(ckpt.params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    binio::write_magic(out, "ROTA", kVersion);
    binio::write_uint<std::uint8_t>(out, static_cast<std::uint8_t>(ckpt.params.variant()));
    const ModelDims& d = ckpt.params.dims();
    for (int v : {d.num_classes, d.embed_dim, d.rs_dim, d.window_hidden, d.attention_dim, d.year_hidden,
                  d.year_layers, d.num_windows, d.window_features}) {
        binio::write_i32(out, v);
    }
    binio::write_uint<std::uint64_t>(out, ckpt.seed);
    binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.params.entries().size()));
    for (const auto& p : ckpt.params.entries()) write_tensor(out, p.name, p.value);
    binio::write_uint<std::uint8_t>(out, ckpt.has_state ? 1 : 0);
    if (ckpt.has_state) {
        const TrainingState& s = ckpt.state;
        binio::write_uint<std::uint64_t>(out, s.adam_step);
        binio::write_i32(out, s.epochs_done);
        binio::write_i32(out, s.best_epoch);
        binio::write_f64(out, s.best_dev_acc);
        binio::write_i32(out, s.epochs_since_best);
        write_list(out, ckpt.params, s.adam_m);
        write_list(out, ckpt.params, s.adam_v);
        write_list(out, ckpt.params, s.current_values);
    }
    if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        if (binio::read_magic(in, "ROTA") != kVersion) throw DataError("unsupported checkpoint version");
        const auto tag = binio::read_uint<std::uint8_t>(in);
        if (tag > static_cast<std::uint8_t>(Variant::Final)) throw DataError("unknown variant tag");
        ModelDims d;
        for (int* f : {&d.num_classes, &d.embed_dim, &d.rs_dim, &d.window_hidden, &d.attention_dim, &d.year_hidden,
                       &d.year_layers, &d.num_windows, &d.window_features}) {
            *f = binio::read_i32(in);
        }
        Checkpoint ckpt;
        ckpt.params = ModelParams<float>(static_cast<Variant>(tag), d);
        ckpt.seed = binio::read_uint<std::uint64_t>(in);
        const auto n = binio::read_uint<std::uint32_t>(in);
        for (std::uint32_t i = 0; i < n; ++i) {
            auto [name, t] = read_tensor(in);
            ckpt.params.add(name, t.shape).value = std::move(t);
        }
        validate_params(ckpt.params);
        ckpt.has_state = binio::read_uint<std::uint8_t>(in) != 0;
        if (ckpt.has_state) {
            TrainingState& s = ckpt.state;
            s.adam_step = binio::read_uint<std::uint64_t>(in);
            s.epochs_done = binio::read_i32(in);
            s.best_epoch = binio::read_i32(in);
            s.best_dev_acc = binio::read_f64(in);
            s.epochs_since_best = binio::read_i32(in);
            s.adam_m = read_list(in, ckpt.params);
            s.adam_v = read_list(in, ckpt.params);
            s.current_values = read_list(in, ckpt.params);
        }
        return ckpt;
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace cropfuse::nn
