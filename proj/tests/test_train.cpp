#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"

#include "cropfuse/train/adam.hpp"
#include "cropfuse/train/trainer.hpp"

using namespace cropfuse;
using train::EpochLog;
using train::TrainConfig;
using train::AdamState;
using train::predict;
using train::make_batch;
using train::sweep_cutoffs;
using train::inseason_sweep;
using train::format_sweep;
using train::format_log_line;

namespace {

constexpr std::size_t kV = 6;

nn::ModelDims small_dims() {
    nn::ModelDims d;
    d.num_classes = kV;
    d.embed_dim = 4;
    d.rs_dim = 6;
    d.window_hidden = 4;
    d.attention_dim = 4;
    d.year_hidden = 8;
    return d;
}

/// Rotation (prev + 1) mod V with 10% noise; every season's features carry
/// a crop-specific bump so RS alone is informative too.
std::vector<ParcelSequence> toy_sequences(std::size_t n, std::uint64_t seed, int first_rs_year = 2010) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<float> noise(0.0f, 0.3f);
    std::vector<ParcelSequence> out;
    for (std::size_t p = 0; p < n; ++p) {
        ParcelSequence seq;
        seq.parcel = p;
        seq.parcel_id = "p" + std::to_string(p);
        CropCode prev = static_cast<CropCode>(rng() % kV);
        for (int t = 0; t < 4; ++t) {
            SequenceStep st;
            st.season_year = 2013 + t;
            st.prev_crop = t == 0 ? static_cast<CropCode>(kV) : prev;
            CropCode label = static_cast<CropCode>((prev + 1) % kV);
            if (u(rng) < 0.1) label = static_cast<CropCode>(rng() % kV);
            st.label = label;
            if (st.season_year >= first_rs_year) {
                auto f = std::make_shared<features::SeasonFeatures>();
                for (std::size_t w = 0; w < features::kNumWindows; ++w)
                    for (std::size_t j = 0; j < features::kFeaturesPerWindow; ++j)
                        f->values[w * features::kFeaturesPerWindow + j] =
                            noise(rng) + (j % kV == static_cast<std::size_t>(label) && w > 8 ? 1.0f : 0.0f);
                st.features = f;
            }
            seq.steps.push_back(st);
            prev = label;
        }
        seq.dist.probs.assign(kV, 1.0 / kV);
        out.push_back(std::move(seq));
    }
    return out;
}

TrainConfig small_config(nn::Variant v) {
    TrainConfig c;
    c.variant = v;
    c.dims = small_dims();
    c.batch_size = 32;
    c.max_epochs = 3;
    c.patience = 3;
    c.lr = 1e-2;
    c.seed = 7;
    return c;
}

bool same_params(const nn::ModelParams<float>& a, const nn::ModelParams<float>& b) {
    if (a.entries().size() != b.entries().size()) return false;
    for (std::size_t k = 0; k < a.entries().size(); ++k)
        if (a.entries()[k].value.data != b.entries()[k].value.data) return false;
    return true;
}

}  // namespace

TEST_CASE("adam first step equals lr times sign of the gradient") {
    auto params = nn::init_params<double>(nn::Variant::LstmCrop, small_dims(), 1);
    AdamState<double> state(params);
    const double before = params["out.b"].value.data[0];
    params.zero_grad();
    params["out.b"].grad.data[0] = 0.37;
    train::adam_step(params, state);
    CHECK(params["out.b"].value.data[0] - before == doctest::Approx(-9.99999999e-4).epsilon(1e-9));
    CHECK(params["out.b"].value.data[1] == 0.0);

    // constant gradient: m_hat / sqrt(v_hat) = 1 at every step
    state = AdamState<double>(params);
    for (int i = 0; i < 100; ++i) {
        params.zero_grad();
        params["out.b"].grad.data[0] = -2.0;
        const double v0 = params["out.b"].value.data[0];
        train::adam_step(params, state);
        const double step = params["out.b"].value.data[0] - v0;
        CHECK(step == doctest::Approx(1e-3 / (1.0 + 1e-8 / 2.0)).epsilon(1e-9));
    }
}

TEST_CASE("training lowers the loss and is deterministic") {
    const auto tr = toy_sequences(200, 1), dev = toy_sequences(60, 2);
    auto cfg = small_config(nn::Variant::Final);
    const auto a = train::train(tr, dev, cfg);
    REQUIRE_FALSE(a.diverged);
    REQUIRE(a.log.size() == 3);
    CHECK(a.log.back().train_loss < a.log.front().train_loss);
    CHECK(a.log.front().train_loss < std::log(double(kV)) + 0.2);
    const auto b = train::train(tr, dev, cfg);
    for (std::size_t e = 0; e < a.log.size(); ++e) {
        CHECK(a.log[e].train_loss == b.log[e].train_loss);
        CHECK(a.log[e].dev_acc == b.log[e].dev_acc);
        CHECK(a.log[e].dev_macro_f1 == b.log[e].dev_macro_f1);
    }
    CHECK(same_params(a.checkpoint.params, b.checkpoint.params));
}

TEST_CASE("augmented training is deterministic and the best epoch is kept") {
    const auto tr = toy_sequences(120, 3), dev = toy_sequences(40, 4);
    auto cfg = small_config(nn::Variant::HierBiLstmMM);
    cfg.augment = true;
    const auto a = train::train(tr, dev, cfg), b = train::train(tr, dev, cfg);
    CHECK(same_params(a.checkpoint.params, b.checkpoint.params));
    double best = -1;
    int best_epoch = 0;
    for (const auto& row : a.log)
        if (row.dev_acc > best) best = row.dev_acc, best_epoch = row.epoch;
    CHECK(a.checkpoint.state.best_epoch == best_epoch);
    CHECK(a.checkpoint.state.best_dev_acc == best);
    const auto preds = predict(a.checkpoint.params, dev);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto r = preds.row(i);
        hit += static_cast<CropCode>(std::max_element(r.begin(), r.end()) - r.begin()) == preds.labels[i];
    }
    CHECK(double(hit) / double(preds.size()) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("patience zero runs exactly one epoch") {
    const auto tr = toy_sequences(60, 5), dev = toy_sequences(20, 6);
    auto cfg = small_config(nn::Variant::LstmCrop);
    cfg.patience = 0;
    cfg.max_epochs = 10;
    const auto r = train::train(tr, dev, cfg);
    CHECK(r.log.size() == 1);
}

TEST_CASE("resume reproduces an uninterrupted run") {
    const auto tr = toy_sequences(100, 7), dev = toy_sequences(30, 8);
    auto cfg = small_config(nn::Variant::Final);
    cfg.augment = true;
    cfg.max_epochs = 4;
    cfg.patience = 4;
    const auto full = train::train(tr, dev, cfg);

    nn::Checkpoint after_two;
    train::train(tr, dev, cfg, nullptr, [&](const nn::Checkpoint& ck, const EpochLog& row) {
        if (row.epoch == 2) after_two = ck;
    });
    const auto rest = train::train(tr, dev, cfg, &after_two);
    REQUIRE(rest.log.size() + 2 == full.log.size());
    for (std::size_t e = 0; e < rest.log.size(); ++e) {
        CHECK(rest.log[e].epoch == full.log[e + 2].epoch);
        CHECK(rest.log[e].train_loss == full.log[e + 2].train_loss);
        CHECK(rest.log[e].dev_acc == full.log[e + 2].dev_acc);
    }
    CHECK(same_params(rest.checkpoint.params, full.checkpoint.params));
}

TEST_CASE("early stop is honored when resuming a finished run") {
    const auto tr = toy_sequences(60, 9), dev = toy_sequences(20, 10);
    auto cfg = small_config(nn::Variant::LstmCrop);
    cfg.patience = 0;
    const auto r = train::train(tr, dev, cfg);
    const auto again = train::train(tr, dev, cfg, &r.checkpoint);
    CHECK(again.log.empty());
    CHECK(same_params(again.checkpoint.params, r.checkpoint.params));
}

TEST_CASE("prediction does not depend on batch size") {
    const auto seqs = toy_sequences(70, 11);
    const auto params = nn::init_params<float>(nn::Variant::Final, small_dims(), 3);
    const auto a = predict(params, seqs, 365, 1), b = predict(params, seqs, 365, 64);
    CHECK(a.probs == b.probs);
    CHECK(a.parcel_ids == b.parcel_ids);
    const auto c = predict(params, seqs, 240, 1), d = predict(params, seqs, 240, 64);
    CHECK(c.probs == d.probs);
}

TEST_CASE("cutoff behaviour") {
    const auto seqs = toy_sequences(30, 12);
    const auto params = nn::init_params<float>(nn::Variant::Final, small_dims(), 4);
    // 365 leaves the features untouched
    std::vector<features::SeasonFeatures> storage;
    std::vector<std::size_t> idx{0, 1, 2};
    std::vector<int> cuts{365, 365, 365};
    const auto batch = make_batch(seqs, idx, kV, cuts, storage);
    CHECK(storage.empty());
    CHECK(batch.features[3] == seqs[0].steps.back().features->values.data());
    CHECK(predict(params, seqs, 180).probs != predict(params, seqs, 365).probs);

    const auto crop_only = nn::init_params<float>(nn::Variant::LstmCrop, small_dims(), 4);
    CHECK(predict(crop_only, seqs, 165).probs == predict(crop_only, seqs, 365).probs);
    std::vector<LabelTaxonomy::Entry> entries;
    for (std::size_t c = 0; c < kV; ++c)
        {
        const auto code = static_cast<CropCode>(c);
        entries.push_back({code, "c" + std::to_string(c), code, code, code});
    }
    const LabelTaxonomy tax(entries);
    const auto cutoffs = sweep_cutoffs();
    CHECK(cutoffs.front() == 165);
    CHECK(cutoffs.back() == 365);
    const auto sweep = inseason_sweep(crop_only, seqs, tax, cutoffs);
    for (const auto& p : sweep) CHECK(p.micro_f1 == sweep.front().micro_f1);
    CHECK(format_sweep(sweep).rfind("cutoff_day\tmicro_f1\n165\t", 0) == 0);
}

TEST_CASE("seasons without imagery do not influence the prediction") {
    // pre-imagery seasons have null features; replacing their (absent)
    // content cannot matter, while changing imagery seasons does
    auto seqs = toy_sequences(10, 13, 2015);
    const auto params = nn::init_params<float>(nn::Variant::Final, small_dims(), 5);
    const auto base = predict(params, seqs);
    auto altered = seqs;
    for (auto& s : altered) {
        CHECK_FALSE(s.steps[0].has_features());
        CHECK_FALSE(s.steps[1].has_features());
        s.steps[0].features = nullptr;
    }
    CHECK(predict(params, altered).probs == base.probs);
    for (auto& s : altered) s.steps[2].features = nullptr;
    CHECK(predict(params, altered).probs != base.probs);
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.lr = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.patience = 51;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    EpochLog row{3, 1.5, 0.5, 0.25, 2.0};
    CHECK(format_log_line(row) == "3\t1.500000\t0.500000\t0.250000\t2.000");
}
