#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "test_util.hpp"

#include "cropfuse/features/season_features.hpp"
#include "cropfuse/util/errors.hpp"

using namespace cropfuse;
using namespace cropfuse::features;

namespace {

prep::SmoothSeries random_smooth(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    prep::SmoothSeries s;
    for (auto& sig : s.values) {
        for (auto& v : sig) v = u(rng);
    }
    return s;
}

}  // namespace

TEST_CASE("window slices") {
    const auto w = window_slices();
    CHECK(w.size() == 25);
    CHECK(w[0].start_day == 0);
    CHECK(w[0].end_day == 30);
    CHECK(w[0].first == 0);
    CHECK(w[0].last == 14);
    CHECK(w[24].start_day == 360);
    CHECK(w[24].end_day == 365);
    CHECK(w[24].count() == 3);
    CHECK(w[1].first == 8);  // day 16 is the first grid day >= 15
    CHECK(w[1].last == 22);  // day 44 is the last grid day < 45
    for (const auto& s : w) CHECK(s.count() >= 1);
}

TEST_CASE("functionals") {
    const std::vector<double> a{1, 2, 3, 4};
    const auto f = functionals(a);
    CHECK(f[0] == 2.5);
    CHECK(f[1] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    CHECK(f[2] == 1.75);
    CHECK(f[3] == 2.5);
    CHECK(f[4] == 3.25);
    CHECK(f[5] == 1);
    CHECK(f[6] == 4);
    const std::vector<double> c{5, 5, 5};
    CHECK(functionals(c) == std::array<double, 7>{5, 0, 5, 5, 5, 5, 5});
    const std::vector<double> one{-0.3};
    CHECK(functionals(one) == std::array<double, 7>{-0.3, 0, -0.3, -0.3, -0.3, -0.3, -0.3});
    CHECK_THROWS_AS(functionals(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("season features layout and ordering properties") {
    prep::SmoothSeries s;
    for (std::size_t i = 0; i < prep::kGridPoints; ++i) {
        s.values[kB4][i] = 0.07;
        s.values[kB8A][i] = 0.3;
        s.values[kLAI][i] = 0.02 * static_cast<double>(i);
        s.values[kFAPAR][i] = 0.5;
    }
    const auto f = season_features(s);
    CHECK(f.values.size() == 700);
    for (std::size_t w = 0; w < kNumWindows; ++w) {
        CHECK(f.at(w, 0) == 0.07f);  // B4 mean
        CHECK(f.at(w, 1) == 0.0f);   // B4 std
        CHECK(f.at(w, 7 + 6) == 0.3f);
        if (w > 0) CHECK(f.at(w, 14) > f.at(w - 1, 14));  // LAI mean rises
    }
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = season_features(random_smooth(rng));
        for (std::size_t w = 0; w < kNumWindows; ++w) {
            for (std::size_t sig = 0; sig < kNumSignals; ++sig) {
                const std::size_t o = sig * kNumFunctionals;
                CHECK(r.at(w, o + 1) >= 0.0f);
                CHECK(r.at(w, o + 5) <= r.at(w, o + 2));
                CHECK(r.at(w, o + 2) <= r.at(w, o + 3));
                CHECK(r.at(w, o + 3) <= r.at(w, o + 4));
                CHECK(r.at(w, o + 4) <= r.at(w, o + 6));
            }
        }
    }
}

TEST_CASE("season features commute with positive affine maps") {
    std::mt19937_64 rng(6);
    const auto s = random_smooth(rng);
    auto t = s;
    for (auto& sig : t.values) {
        for (auto& v : sig) v = 3.0 * v + 2.0;
    }
    const auto a = season_features(s), b = season_features(t);
    for (std::size_t w = 0; w < kNumWindows; ++w) {
        for (std::size_t k = 0; k < kFeaturesPerWindow; ++k) {
            const double expect = (k % kNumFunctionals == 1) ? 3.0 * a.at(w, k) : 3.0 * a.at(w, k) + 2.0;
            CHECK(b.at(w, k) == doctest::Approx(expect).epsilon(1e-5));
        }
    }
}

TEST_CASE("truncation") {
    std::mt19937_64 rng(7);
    const auto f = season_features(random_smooth(rng));
    CHECK(truncate_at(f, 365).values == f.values);
    CHECK(truncate_at(f, 0).is_zero());
    const auto t = truncate_at(f, 180);
    for (std::size_t w = 0; w < kNumWindows; ++w) {
        for (std::size_t k = 0; k < kFeaturesPerWindow; ++k) CHECK(t.at(w, k) == (w < 12 ? f.at(w, k) : 0.0f));
    }
    const auto m = truncate_at(f, 165);
    CHECK(m.at(10, 0) == f.at(10, 0));  // starts at 150, straddles 165
    CHECK(m.at(11, 0) == 0.0f);         // starts at 165
    for (int a = 0; a <= 365; a += 23) {
        for (int b = 0; b <= 365; b += 31) {
            CHECK(truncate_at(truncate_at(f, a), b).values == truncate_at(f, std::min(a, b)).values);
        }
    }
}

TEST_CASE("augmentation cutoffs are uniform over the mid-March..end set") {
    const auto cuts = augment_cutoffs();
    REQUIRE(cuts.size() == 15);
    CHECK(cuts.front() == 165);
    CHECK(cuts[cuts.size() - 2] == 360);
    CHECK(cuts.back() == 365);
    std::mt19937_64 rng(2024);
    std::map<int, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[draw_augment_cutoff(rng)];
    CHECK(counts.size() == cuts.size());
    const double p = 1.0 / static_cast<double>(cuts.size());
    const double mean = draws * p, sigma = std::sqrt(draws * p * (1 - p));
    double chi2 = 0;
    for (int c : cuts) {
        CHECK(std::abs(counts[c] - mean) <= 3 * sigma);
        chi2 += (counts[c] - mean) * (counts[c] - mean) / mean;
    }
    CHECK(chi2 < 36.12);  // 99.9% quantile, 14 degrees of freedom

    std::mt19937_64 r1(5), r2(5);
    const auto f = season_features(random_smooth(r1));
    std::mt19937_64 a(9), b(9);
    const int cut = draw_augment_cutoff(b);
    CHECK(augment_crop(f, a).values == truncate_at(f, cut).values);
}

TEST_CASE("feature cache round-trips bit-exactly") {
    testutil::TempDir dir("features");
    Dataset ds(3);
    ds.add_parcel({"x", 0, 0, 1});
    ds.add_parcel({"y", 0, 0, 1});
    ds.finalize();
    std::mt19937_64 rng(3);
    FeatureTable table;
    table.insert(0, 2019, std::make_shared<SeasonFeatures>(season_features(random_smooth(rng))));
    table.insert(1, 2020, std::make_shared<SeasonFeatures>(season_features(random_smooth(rng))));
    save_feature_cache(ds, table, dir.file("f.bin"));
    const auto back = load_feature_cache(ds, dir.file("f.bin"));
    REQUIRE(back.size() == 2);
    CHECK(back.find(0, 2019)->values == table.find(0, 2019)->values);
    CHECK(back.find(1, 2020)->values == table.find(1, 2020)->values);
    CHECK(back.find(1, 2019) == nullptr);
    testutil::TempDir other("features_bad");
    CHECK_THROWS_AS(load_feature_cache(ds, other.write("bad.bin", "FEAX")), DataError);
}

TEST_CASE("compute_features is independent of worker count") {
    std::mt19937_64 rng(1);
    prep::SmoothTable smooth;
    for (std::size_t p = 0; p < 30; ++p) smooth.entries.push_back({p, 2020, random_smooth(rng)});
    const auto a = compute_features(smooth, 1);
    const auto b = compute_features(smooth, 4);
    REQUIRE(a.size() == 30);
    for (const auto& [key, f] : a.entries()) CHECK(b.find(key.first, key.second)->values == f->values);
}
