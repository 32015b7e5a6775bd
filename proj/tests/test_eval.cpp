#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "cropfuse/eval/metrics.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace cropfuse;
using namespace cropfuse::eval;

namespace {

LabelTaxonomy toy_taxonomy() {
    using E = LabelTaxonomy::Entry;
    // c12 groups: 0 cereals {0,1}, 1 maize {2}, 2 grass {3}, 3 other {4}, 4 oilseed {5,6}
    return LabelTaxonomy({E{0, "wheat", 0, 0, 0}, E{1, "barley", 1, 0, 0}, E{2, "maize", 2, 1, 1},
                          E{3, "grass", 3, 2, -1}, E{4, "other", 4, 3, -1}, E{5, "rapeseed", 5, 4, 2},
                          E{6, "sunflower", 5, 4, 2}});
}

}  // namespace

TEST_CASE("worked two-class example") {
    // confusion [[2,1],[0,1]]
    const std::vector<CropCode> y{0, 0, 0, 1}, p{0, 0, 1, 1};
    const auto r = evaluate_classes(y, p, 2);
    CHECK(r.classes[0].precision == 1.0);
    CHECK(r.classes[0].recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.classes[0].f1 == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(r.classes[1].precision == 0.5);
    CHECK(r.classes[1].recall == 1.0);
    CHECK(r.classes[1].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(std::round(r.macro_f1 * 1e4) / 1e4 == 0.7333);
    CHECK(r.accuracy == 0.75);
    CHECK(r.micro_f1 == 0.75);
    CHECK(r.confusion == std::vector<std::vector<std::size_t>>{{2, 1}, {0, 1}});
}

TEST_CASE("perfect predictions and empty sets") {
    const std::vector<CropCode> y{0, 2, 1, 2};
    const auto r = evaluate_classes(y, y, 4);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.macro_precision == 1.0);
    CHECK(r.macro_recall == 1.0);
    CHECK(r.accuracy == 1.0);
    CHECK(r.micro_f1 == 1.0);
    CHECK(r.classes[3].support == 0);
    CHECK_THROWS_AS(evaluate_classes({}, {}, 3), std::invalid_argument);
}

TEST_CASE("metrics equal brute-force counting on random prediction sets") {
    std::mt19937_64 rng(1000);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + trial % 9;
        const std::size_t n = 1 + static_cast<std::size_t>(rng() % 60);
        std::uniform_int_distribution<int> cls(0, static_cast<int>(k) - 1);
        std::vector<CropCode> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = cls(rng);
            p[i] = (rng() % 3 == 0) ? y[i] : cls(rng);
        }
        const auto r = evaluate_classes(y, p, k);
        const auto o = oracle::brute_force_metrics(y, p, k);
        for (std::size_t c = 0; c < k; ++c) {
            CHECK(r.classes[c].precision == o.p[c]);
            CHECK(r.classes[c].recall == o.r[c]);
            CHECK(r.classes[c].f1 == o.f[c]);
        }
        CHECK(r.macro_precision == o.macro_p);
        CHECK(r.macro_recall == o.macro_r);
        CHECK(r.macro_f1 == o.macro_f);
        CHECK(r.accuracy == o.acc);
        CHECK(r.micro_f1 == o.micro);
        CHECK(r.micro_f1 == doctest::Approx(r.accuracy).epsilon(1e-15));
    }
}

TEST_CASE("macro-F1 is invariant under class relabeling") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 5;
        std::vector<CropCode> y(40), p(40);
        for (std::size_t i = 0; i < 40; ++i) {
            y[i] = static_cast<CropCode>(rng() % k);
            p[i] = static_cast<CropCode>(rng() % k);
        }
        std::vector<CropCode> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<CropCode> y2(40), p2(40);
        for (std::size_t i = 0; i < 40; ++i) {
            y2[i] = perm[static_cast<std::size_t>(y[i])];
            p2[i] = perm[static_cast<std::size_t>(p[i])];
        }
        CHECK(evaluate_classes(y, p, k).macro_f1 == doctest::Approx(evaluate_classes(y2, p2, k).macro_f1).epsilon(1e-14));
    }
}

TEST_CASE("aggregation sums probabilities and drops excluded mass at c10") {
    const auto tax = toy_taxonomy();
    const std::vector<double> fine{0.3, 0.4, 0.05, 0.2, 0.0, 0.03, 0.02};
    const auto c12 = aggregate_probs(tax, fine, Level::C12);
    CHECK(c12[0] == doctest::Approx(0.7));
    CHECK(c12[4] == doctest::Approx(0.05));
    const auto c10 = aggregate_probs(tax, fine, Level::C10);
    CHECK(c10.size() == 3);
    CHECK(std::accumulate(c10.begin(), c10.end(), 0.0) == doctest::Approx(0.8));
    const std::vector<double> one{0, 0, 0, 0, 0, 1, 0};
    CHECK(aggregate_probs(tax, one, Level::C12) == std::vector<double>{0, 0, 0, 0, 1});
    CHECK(aggregate_probs(tax, one, Level::Fine) == one);
}

TEST_CASE("excluded groups win c10 predictions and count as misses") {
    const auto tax = toy_taxonomy();
    const std::vector<double> grassy{0.1, 0.1, 0.1, 0.6, 0.0, 0.05, 0.05};
    const auto p = predict_level(tax, grassy, Level::C10);
    CHECK(p.predicted == kExcluded);
    CHECK(p.prob == doctest::Approx(0.6));
    CHECK(predict_level(tax, grassy, Level::C12).predicted == 2);

    PredictionSet set;
    set.num_classes = 7;
    set.labels = {0, 3, 2, 5};  // the grass label is dropped at c10
    const std::vector<double> good_wheat{0.9, 0.02, 0.02, 0.02, 0.02, 0.01, 0.01};
    const std::vector<double> good_maize{0.02, 0.02, 0.9, 0.02, 0.02, 0.01, 0.01};
    for (const auto* row : {&good_wheat, &grassy, &good_maize, &grassy}) {
        set.probs.insert(set.probs.end(), row->begin(), row->end());
        set.parcel_ids.push_back("p");
    }
    const auto r = evaluate(set, tax, Level::C10);
    CHECK(r.evaluated == 3);
    CHECK(r.dropped == 1);
    CHECK(r.excluded_predictions == 1);
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
    // P = 2/2, R = 2/3
    CHECK(r.micro_f1 == doctest::Approx(0.8));
    const auto r12 = evaluate(set, tax, Level::C12);
    CHECK(r12.micro_f1 == doctest::Approx(r12.accuracy).epsilon(1e-15));
}

TEST_CASE("threshold filtering coverage") {
    const auto tax = toy_taxonomy();
    std::mt19937_64 rng(5);
    std::gamma_distribution<double> g(0.3, 1.0);
    PredictionSet set;
    set.num_classes = 7;
    for (int i = 0; i < 300; ++i) {
        std::vector<double> p(7);
        double s = 0;
        for (auto& v : p) s += (v = g(rng) + 1e-9);
        for (auto& v : p) v /= s;
        set.probs.insert(set.probs.end(), p.begin(), p.end());
        set.labels.push_back(static_cast<CropCode>(rng() % 7));
        set.parcel_ids.push_back(std::to_string(i));
    }
    CHECK(threshold_filter(set, tax, Level::C12, 0.0).coverage == 1.0);
    CHECK(threshold_filter(set, tax, Level::C12, 1.0).coverage == 0.0);
    double prev = 1.0;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
        const double c = threshold_filter(set, tax, Level::C12, tau).coverage;
        CHECK(c <= prev);
        prev = c;
    }
    const auto r = evaluate(set, tax, Level::C12, 0.9);
    CHECK(r.coverage == doctest::Approx(threshold_filter(set, tax, Level::C12, 0.9).coverage));
    CHECK(r.threshold == 0.9);
}

TEST_CASE("reports carry every class row") {
    const std::vector<CropCode> y{0, 0, 0, 1}, p{0, 0, 1, 1};
    const auto r = evaluate_classes(y, p, 3);
    const auto tsv = report_tsv(r);
    CHECK(tsv.find("macro_f1\t0.733333") != std::string::npos);
    CHECK(tsv.find("\n2\t0\t0\t") != std::string::npos);
    const auto j = nlohmann::json::parse(report_json(r));
    CHECK(j["classes"].size() == 3);
    CHECK(j["accuracy"].get<double>() == 0.75);
}
