#include "cropfuse/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cropfuse/train/adam.hpp"
#include "cropfuse/util/errors.hpp"

namespace cropfuse::train {

TrainConfig TrainConfig::desk_scale() {
    TrainConfig c;
    c.dims.embed_dim = 16;
    c.dims.rs_dim = 32;
    c.dims.window_hidden = 16;
    c.dims.attention_dim = 16;
    c.dims.year_hidden = 32;
    c.batch_size = 64;
    c.lr = 3e-3;
    c.max_epochs = 30;
    c.patience = 6;
    return c;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 0 || patience > max_epochs) throw std::invalid_argument("patience must lie in [0, max_epochs]");
}

std::string format_log_line(const EpochLog& row) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6f\t%.3f", row.epoch, row.train_loss, row.dev_acc,
                  row.dev_macro_f1, row.seconds);
    return buf;
}

nn::SequenceBatch make_batch(const std::vector<ParcelSequence>& sequences, std::span<const std::size_t> indices,
                             std::size_t num_classes, std::span<const int> cutoffs,
                             std::vector<features::SeasonFeatures>& storage) {
    if (indices.empty()) throw std::invalid_argument("empty batch");
    const std::size_t T = sequences[indices[0]].steps.size();
    nn::SequenceBatch batch;
    batch.resize(indices.size(), T, num_classes);
    storage.clear();
    storage.reserve(indices.size());
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const ParcelSequence& seq = sequences.at(indices[b]);
        if (seq.steps.size() != T) throw std::invalid_argument("sequences in a batch differ in length");
        if (seq.dist.probs.size() != num_classes) throw std::invalid_argument("distribution length mismatch");
        for (std::size_t t = 0; t < T; ++t) {
            const SequenceStep& st = seq.steps[t];
            batch.prev_crop[b * T + t] = st.prev_crop;
            if (st.features) batch.features[b * T + t] = st.features->values.data();
        }
        const SequenceStep& target = seq.steps.back();
        if (!cutoffs.empty() && target.features && cutoffs[b] < 365) {
            storage.push_back(features::truncate_at(*target.features, cutoffs[b]));
            batch.features[b * T + T - 1] = storage.back().values.data();
        }
        for (std::size_t j = 0; j < num_classes; ++j) batch.dist[b * num_classes + j] = static_cast<float>(seq.dist.probs[j]);
        batch.labels[b] = seq.target();
    }
    return batch;
}

template <typename S>
eval::PredictionSet predict(const nn::ModelParams<S>& params, const std::vector<ParcelSequence>& sequences,
                            int cutoff_day, std::size_t batch_size) {
    const auto V = static_cast<std::size_t>(params.dims().num_classes);
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    eval::PredictionSet out;
    out.num_classes = V;
    out.probs.reserve(sequences.size() * V);
    std::vector<features::SeasonFeatures> storage;
    for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, sequences.size() - start);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), start);
        const std::vector<int> cuts(n, cutoff_day);
        const auto batch = make_batch(sequences, idx, V, cuts, storage);
        const auto res = nn::forward(params, batch);
        for (std::size_t b = 0; b < n; ++b) {
            const auto& seq = sequences[start + b];
            out.parcel_ids.push_back(seq.parcel_id);
            out.labels.push_back(seq.target());
            for (std::size_t j = 0; j < V; ++j) out.probs.push_back(static_cast<double>(res.probs(b, j)));
        }
    }
    return out;
}

std::vector<int> sweep_cutoffs() { return features::augment_cutoffs(); }

std::vector<SweepPoint> inseason_sweep(const nn::ModelParams<float>& params,
                                       const std::vector<ParcelSequence>& sequences, const LabelTaxonomy& taxonomy,
                                       std::span<const int> cutoffs, Level level) {
    std::vector<SweepPoint> out;
    for (int cut : cutoffs) {
        const auto preds = predict(params, sequences, cut);
        out.push_back({cut, eval::evaluate(preds, taxonomy, level).micro_f1});
    }
    return out;
}

std::string format_sweep(const std::vector<SweepPoint>& points) {
    std::ostringstream out;
    out << "cutoff_day\tmicro_f1\n";
    char buf[64];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%d\t%.6f\n", p.cutoff_day, p.micro_f1);
        out << buf;
    }
    return out.str();
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::initializer_list<std::uint32_t> keys) {
    std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    material.insert(material.end(), keys.begin(), keys.end());
    std::seed_seq seq(material.begin(), material.end());
    return std::mt19937_64(seq);
}

template <typename S>
std::vector<nn::Tensor<float>> snapshot(const std::vector<std::vector<S>>& values, const nn::ModelParams<S>& like) {
    std::vector<nn::Tensor<float>> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        nn::Tensor<float> t(like.entries()[k].value.shape);
        for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<float>(values[k][i]);
        out.push_back(std::move(t));
    }
    return out;
}

template <typename S>
std::vector<std::vector<S>> values_of(const nn::ModelParams<S>& params) {
    std::vector<std::vector<S>> out;
    for (const auto& p : params.entries()) out.push_back(p.value.data);
    return out;
}

template <typename S>
std::vector<std::vector<S>> from_tensors(const std::vector<nn::Tensor<float>>& tensors) {
    std::vector<std::vector<S>> out;
    for (const auto& t : tensors) out.emplace_back(t.data.begin(), t.data.end());
    return out;
}

template <typename S>
TrainResult run(const std::vector<ParcelSequence>& train_set, const std::vector<ParcelSequence>& dev_set,
                const TrainConfig& config, const nn::Checkpoint* resume, const EpochCallback& on_epoch) {
    nn::ModelDims dims = config.dims;
    if (dims.num_classes == 0) dims.num_classes = static_cast<int>(train_set.front().dist.probs.size());
    const auto V = static_cast<std::size_t>(dims.num_classes);

    nn::ModelParams<S> params = nn::init_params<S>(config.variant, dims, config.seed);
    AdamState<S> adam(params);
    std::vector<std::vector<S>> best = values_of(params);
    int epochs_done = 0, best_epoch = 0, since_best = 0;
    double best_acc = -1.0;

    if (resume) {
        if (resume->params.variant() != config.variant || !(resume->params.dims() == dims)) {
            throw std::invalid_argument("resume checkpoint does not match the configured model");
        }
        if (!resume->has_state) throw std::invalid_argument("resume checkpoint carries no training state");
        const auto& st = resume->state;
        const auto current = from_tensors<S>(st.current_values);
        for (std::size_t k = 0; k < current.size(); ++k) params.entries()[k].value.data = current[k];
        adam.step = st.adam_step;
        adam.m = from_tensors<S>(st.adam_m);
        adam.v = from_tensors<S>(st.adam_v);
        best.clear();
        for (const auto& p : resume->params.entries()) best.emplace_back(p.value.data.begin(), p.value.data.end());
        epochs_done = st.epochs_done;
        best_epoch = st.best_epoch;
        best_acc = st.best_dev_acc;
        since_best = st.epochs_since_best;
    }

    const auto make_checkpoint = [&]() {
        nn::Checkpoint ck;
        ck.params = nn::ModelParams<float>(config.variant, dims);
        for (std::size_t k = 0; k < best.size(); ++k) {
            auto& p = ck.params.add(params.entries()[k].name, params.entries()[k].value.shape);
            for (std::size_t i = 0; i < best[k].size(); ++i) p.value.data[i] = static_cast<float>(best[k][i]);
        }
        ck.seed = config.seed;
        ck.has_state = true;
        ck.state.adam_step = adam.step;
        ck.state.adam_m = snapshot(adam.m, params);
        ck.state.adam_v = snapshot(adam.v, params);
        ck.state.current_values = snapshot(values_of(params), params);
        ck.state.epochs_done = epochs_done;
        ck.state.best_epoch = best_epoch;
        ck.state.best_dev_acc = best_acc;
        ck.state.epochs_since_best = since_best;
        return ck;
    };

    TrainResult result;
    result.checkpoint = make_checkpoint();
    const bool stopped = epochs_done > 0 && since_best >= config.patience;
    std::vector<std::size_t> order(train_set.size());
    std::vector<features::SeasonFeatures> storage;
    std::vector<int> cutoffs;
    for (int epoch = epochs_done + 1; !stopped && epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto shuffle_rng = stream(config.seed, {static_cast<std::uint32_t>(epoch), 1u});
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        try {
            std::uint32_t batch_no = 0;
            for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
                const std::size_t n = std::min(config.batch_size, order.size() - start);
                const std::span<const std::size_t> idx(order.data() + start, n);
                cutoffs.clear();
                if (config.augment) {
                    for (std::size_t b = 0; b < n; ++b) {
                        auto rng = stream(config.seed,
                                          {static_cast<std::uint32_t>(epoch), batch_no, static_cast<std::uint32_t>(b), 2u});
                        cutoffs.push_back(features::draw_augment_cutoff(rng));
                    }
                }
                const auto batch = make_batch(train_set, idx, V, cutoffs, storage);
                const S loss = nn::loss_and_backward(params, batch);
                loss_sum += static_cast<double>(loss) * static_cast<double>(n);
                adam_step(params, adam, AdamConfig{config.lr});
            }
        } catch (const NumericalError& e) {
            result.diverged = true;
            result.message = std::string(e.what()) + " in epoch " + std::to_string(epoch);
            return result;
        }

        const auto dev = predict(params, dev_set);
        std::vector<CropCode> labels(dev.labels), pred(dev.size());
        for (std::size_t i = 0; i < dev.size(); ++i) {
            const auto row = dev.row(i);
            pred[i] = static_cast<CropCode>(std::max_element(row.begin(), row.end()) - row.begin());
        }
        const auto report = eval::evaluate_classes(labels, pred, V);

        ++epochs_done;
        if (report.accuracy > best_acc) {
            best_acc = report.accuracy;
            best_epoch = epoch;
            since_best = 0;
            best = values_of(params);
        } else {
            ++since_best;
        }
        EpochLog row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(order.size());
        row.dev_acc = report.accuracy;
        row.dev_macro_f1 = report.macro_f1;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(row);
        result.checkpoint = make_checkpoint();
        if (on_epoch) on_epoch(result.checkpoint, row);
        if (since_best >= config.patience) break;
    }
    return result;
}

}  // namespace

TrainResult train(const std::vector<ParcelSequence>& train_set, const std::vector<ParcelSequence>& dev_set,
                  const TrainConfig& config, const nn::Checkpoint* resume, const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw std::invalid_argument("empty training set");
    if (dev_set.empty()) throw std::invalid_argument("empty dev set");
    if (config.precision == Precision::F64) return run<double>(train_set, dev_set, config, resume, on_epoch);
    return run<float>(train_set, dev_set, config, resume, on_epoch);
}

template eval::PredictionSet predict<float>(const nn::ModelParams<float>&, const std::vector<ParcelSequence>&, int,
                                            std::size_t);
template eval::PredictionSet predict<double>(const nn::ModelParams<double>&, const std::vector<ParcelSequence>&, int,
                                             std::size_t);

}  // namespace cropfuse::train
