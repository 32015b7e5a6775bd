#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_util.hpp"

#include "cropfuse/core/sequences.hpp"
#include "cropfuse/cropdist/distribution.hpp"
#include "cropfuse/prep/pipeline.hpp"
#include "cropfuse/synth/synth.hpp"

using namespace cropfuse;
using namespace cropfuse::synth;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.num_parcels = 400;
    c.years = 6;
    return c;
}

bool same_dataset(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto &p = a.parcel(i), &q = b.parcel(i);
        if (p.parcel_id != q.parcel_id || p.centroid_x != q.centroid_x || p.centroid_y != q.centroid_y ||
            p.area_ha != q.area_ha)
            return false;
        if (a.crops_of(i) != b.crops_of(i)) return false;
        const auto &s = a.samples_of(i), &t = b.samples_of(i);
        if (s.size() != t.size()) return false;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (s[j].date != t[j].date || s[j].values != t[j].values) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("transition matrices are row-stochastic") {
    std::mt19937_64 rng(1);
    for (double alpha : {0.0, 1.0, 8.0, 50.0}) {
        const auto p = sharpened_transitions(7, alpha, rng);
        for (const auto& row : p) {
            double sum = 0;
            for (double x : row) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("alpha 0 gives uniform transitions") {
    SynthConfig c;
    c.sharpness = 0.0;
    c.num_crops = 10;
    c.regions = 1;
    c.years = 10;
    c.num_parcels = 11'112;  // 100 008 transitions
    const auto world = make_world(c);
    const auto draws = gen_rotations(c, world);
    std::vector<std::vector<double>> counts(10, std::vector<double>(10, 0.0));
    for (const auto& d : draws)
        for (std::size_t y = 1; y < d.crops.size(); ++y) counts[d.crops[y - 1]][d.crops[y]] += 1.0;
    double chi2 = 0.0;
    for (const auto& row : counts) {
        double n = 0;
        for (double x : row) n += x;
        for (double x : row) chi2 += (x - n / 10.0) * (x - n / 10.0) / (n / 10.0);
    }
    const double dof = 10.0 * 9.0;
    CHECK(chi2 <= dof + 3.0 * std::sqrt(2.0 * dof));
}

TEST_CASE("large alpha gives deterministic rotations") {
    SynthConfig c;
    c.sharpness = 2000.0;
    c.regions = 2;
    c.num_parcels = 300;
    const auto world = make_world(c);
    const auto draws = gen_rotations(c, world);
    for (const auto& d : draws) {
        const auto& t = world.transitions[d.region];
        for (std::size_t y = 1; y < d.crops.size(); ++y) {
            const auto& row = t[d.crops[y - 1]];
            CHECK(d.crops[y] == std::max_element(row.begin(), row.end()) - row.begin());
        }
    }
}

TEST_CASE("generation is a pure function of the seed") {
    const auto c = small_config();
    const auto a = gen_dataset(c, 1), b = gen_dataset(c, 4);
    CHECK(same_dataset(a.dataset, b.dataset));
    CHECK(a.regions == b.regions);
    auto other = c;
    other.seed = 8;
    CHECK_FALSE(same_dataset(a.dataset, gen_dataset(other).dataset));
}

TEST_CASE("generated values respect the raw series ranges") {
    auto c = small_config();
    c.noise = 0.05;
    c.spike_rate = 0.3;
    const auto data = gen_dataset(c);
    std::size_t seasons = 0;
    for (std::size_t i = 0; i < data.dataset.size(); ++i)
        for (int y : data.dataset.rs_seasons(i)) {
            CHECK_NOTHROW(prep::extract_season(data.dataset, i, y).validate());
            ++seasons;
        }
    CHECK(seasons == c.num_parcels * static_cast<std::size_t>(c.last_year - c.rs_start_year + 1));
}

TEST_CASE("noise-free signals are recovered by prep") {
    SynthConfig c;
    c.noise = 0.0;
    c.cloud_rate = 0.0;
    c.spike_rate = 0.0;
    c.shift_days = 0.0;
    World world;
    Phenology p;
    p.sow_day = 100;
    p.harvest_day = 260;
    p.rise_days = 25;
    p.fall_days = 25;
    p.peak_lai = 4.0;
    world.crops = {p};
    double worst[kNumSignals] = {};
    for (std::uint64_t rep = 0; rep < 30; ++rep) {
        std::mt19937_64 rng(rep);
        const auto d = gen_signals(0, 2019, c, world, rng);
        CHECK(d.spikes.empty());
        const auto smooth = prep::prep_season(d.raw);
        for (std::size_t g = 0; g < prep::kGridPoints; ++g) {
            const int day = static_cast<int>(g) * prep::kGridStepDays;
            if (day <= d.raw.days.front() || day >= d.raw.days.back()) continue;
            const double lai = lai_at(d.phenology, day), fapar = fapar_from_lai(lai);
            const double truth[kNumSignals] = {b4_from_fapar(fapar), b8a_from_fapar(fapar), lai, fapar};
            for (std::size_t s = 0; s < kNumSignals; ++s)
                worst[s] = std::max(worst[s], std::abs(smooth.values[s][g] - truth[s]));
        }
    }
    CHECK(worst[kB4] < 1e-3);
    CHECK(worst[kB8A] < 1e-3);
    CHECK(worst[kFAPAR] < 1e-3);
    CHECK(worst[kLAI] < 1e-2);  // LAI spans a 10x larger range
}

TEST_CASE("injected B4 spikes are flagged by the Hampel filter") {
    SynthConfig c;
    c.spike_rate = 0.05;
    c.cloud_rate = 0.2;
    const auto world = make_world(c);
    std::size_t spikes = 0, flagged = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        std::mt19937_64 rng(rep);
        const auto d = gen_signals(static_cast<CropCode>(rep % 10), 2018, c, world, rng);
        const auto mask = prep::hampel_filter(d.raw.values[kB4], d.raw.days);
        for (std::size_t i : d.spikes) {
            ++spikes;
            flagged += mask[i];
        }
    }
    REQUIRE(spikes > 100);
    CHECK(double(flagged) / double(spikes) >= 0.95);
}

TEST_CASE("phenology 60 days apart separates window means") {
    Phenology a;
    a.sow_day = 60;
    a.harvest_day = 200;
    a.rise_days = 15;
    a.fall_days = 12;
    a.peak_lai = 4.0;
    Phenology b = a;
    b.sow_day += 60;
    b.harvest_day += 60;
    const double sigma = 10.0 * SynthConfig{}.noise;
    const auto slices = features::window_slices();
    int differing = 0;
    for (const auto& w : slices) {
        double ma = 0, mb = 0;
        for (std::size_t g = w.first; g <= w.last; ++g) {
            ma += lai_at(a, 2.0 * g);
            mb += lai_at(b, 2.0 * g);
        }
        differing += std::abs(ma - mb) / double(w.count()) > 2.0 * sigma;
    }
    CHECK(differing >= 5);
}

TEST_CASE("taxonomy has paired coarse classes and one excluded group") {
    const auto tax = synth_taxonomy(10);
    CHECK(tax.size() == 10);
    CHECK(tax.num_classes(Level::C28) == 10);
    CHECK(tax.num_classes(Level::C12) == 5);
    CHECK(tax.num_classes(Level::C10) == 4);
    CHECK(tax.excluded_c12_groups() == std::vector<CropCode>{4});
    for (int g = 0; g < 5; ++g) {
        int members = 0;
        for (const auto& e : tax.entries()) members += e.class12 == g;
        CHECK(members >= 2);
    }
}

TEST_CASE("written files load back unchanged") {
    SynthConfig c;
    c.num_crops = 10;
    c.num_parcels = 5000;
    c.years = 10;
    c.regions = 4;
    const auto data = gen_dataset(c);
    testutil::TempDir dir("synth_roundtrip");
    write_dataset(data, dir.path());
    const auto tax = load_taxonomy(dir.file("taxonomy.csv"));
    const auto loaded =
        load_dataset(dir.file("parcels.csv"), dir.file("crops.csv"), dir.file("rs.csv"), tax);
    CHECK(same_dataset(data.dataset, loaded));
    CHECK(tax.size() == 10);
}

TEST_CASE("region priors separate neighbourhood distributions") {
    auto c = small_config();
    c.num_parcels = 800;
    const auto data = gen_dataset(c);
    const auto dists = cropdist::distributions_for_year(data.dataset, c.last_year, 1);
    const auto l1 = [](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0;
        for (std::size_t k = 0; k < x.size(); ++k) s += std::abs(x[k] - y[k]);
        return s;
    };
    double within = 0, between = 0;
    std::size_t nw = 0, nb = 0;
    for (std::size_t i = 0; i < dists.size(); i += 7)
        for (std::size_t j = i + 1; j < dists.size(); j += 5) {
            const double d = l1(dists[i].probs, dists[j].probs);
            if (data.regions[i] == data.regions[j]) within += d, ++nw;
            else between += d, ++nb;
        }
    CHECK(within / double(nw) < between / double(nb));
}

TEST_CASE("short histories are padded to the full sequence length") {
    auto c = small_config();
    c.years = 4;  // 2017 .. 2020
    c.num_parcels = 50;
    const auto data = gen_dataset(c);
    const auto smooth = prep::prep_dataset(data.dataset, 1);
    const auto feats = features::compute_features(smooth, 1);
    const auto seqs = build_sequences(data.dataset, feats, {}, 2020);
    REQUIRE(seqs.size() == 50);
    const CropCode unknown = 10;
    for (const auto& s : seqs) {
        REQUIRE(s.steps.size() == 10);
        for (int t = 0; t < 6; ++t) {
            CHECK(s.steps[t].prev_crop == unknown);
            CHECK_FALSE(s.steps[t].has_features());
        }
        CHECK(s.steps[6].prev_crop == unknown);  // 2016 is unlabeled
        CHECK(s.steps[7].prev_crop == *data.dataset.crop_at(s.parcel, 2017));
        CHECK(s.steps[9].has_features());
    }
}

TEST_CASE("config validation") {
    SynthConfig c;
    CHECK_NOTHROW(c.validate());
    c.num_crops = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SynthConfig{};
    c.cloud_rate = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    std::mt19937_64 rng(1);
    const auto world = make_world(SynthConfig{});
    CHECK_THROWS_AS(gen_signals(10, 2019, SynthConfig{}, world, rng), std::invalid_argument);
}
