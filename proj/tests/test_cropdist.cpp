#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

#include "cropfuse/cropdist/distribution.hpp"
#include "cropfuse/cropdist/grid_index.hpp"

using namespace cropfuse;
using namespace cropfuse::cropdist;

namespace {

Dataset random_dataset(std::size_t n, std::uint64_t seed, int V, double offset_x = 0, double offset_y = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(0.0, 60'000.0), area(0.5, 5.0);
    std::uniform_int_distribution<int> crop(0, V - 1);
    Dataset ds(V);
    for (std::size_t i = 0; i < n; ++i) {
        ds.add_parcel({"p" + std::to_string(i), pos(rng) + offset_x, pos(rng) + offset_y, area(rng)});
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 7 != 3) ds.add_crop({"p" + std::to_string(i), 2019, crop(rng)});
    }
    ds.finalize();
    return ds;
}

}  // namespace

TEST_CASE("grid index radius query equals a linear scan") {
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<double> pos(-50'000.0, 50'000.0);
    std::vector<Point> pts(1000);
    for (auto& p : pts) p = {pos(rng), pos(rng)};
    // a few points exactly on cell boundaries
    pts[0] = {10'000.0, 0.0};
    pts[1] = {0.0, -20'000.0};
    const GridIndex index(pts);
    for (std::size_t q = 0; q < pts.size(); ++q) {
        CHECK(index.radius_query(pts[q], 10'000.0) == oracle::scan(pts, pts[q], 10'000.0));
    }
    for (int q = 0; q < 200; ++q) {
        const Point c{pos(rng), pos(rng)};
        CHECK(index.radius_query(c, 7'500.0) == oracle::scan(pts, c, 7'500.0));
    }
    CHECK_THROWS_AS(index.radius_query({0, 0}, 10'001.0), std::invalid_argument);
}

TEST_CASE("grid index cells and boundaries") {
    const std::vector<Point> one{{123.0, 456.0}};
    CHECK(GridIndex(one).occupied_cells() == 1);
    const std::vector<Point> edge{{10'000.0, 5'000.0}, {9'999.0, 5'000.0}, {15'000.0, 5'000.0}};
    const GridIndex idx(edge);
    CHECK(idx.occupied_cells() == 2);
    CHECK(idx.radius_query({9'999.0, 5'000.0}, 10'000.0) == std::vector<std::size_t>{0, 1, 2});
    CHECK(idx.radius_query({15'000.0, 5'000.0}, 5'000.0) == std::vector<std::size_t>{0, 2});
    CHECK(idx.radius_query({5'000.0, 5'000.0}, 5'000.0) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("neighborhood distribution examples") {
    Dataset ds(3);
    ds.add_parcel({"a", 0, 0, 1});
    ds.add_parcel({"b", 1000, 0, 1});
    ds.add_parcel({"c", 0, 2000, 2});
    ds.add_parcel({"far", 100'000, 100'000, 4});
    ds.add_parcel({"lonely", -100'000, 0, 1});
    ds.add_crop({"a", 2019, 0});
    ds.add_crop({"b", 2019, 0});
    ds.add_crop({"c", 2019, 1});
    ds.add_crop({"far", 2019, 2});
    ds.finalize();
    const auto index = build_grid_index(ds);
    const auto crops = ds.crops_in(2019);
    const auto d = neighborhood_distribution(ds, 0, index, crops);
    CHECK(d.probs == std::vector<double>{0.5, 0.5, 0.0});
    CHECK(!d.empty_neighborhood);
    const auto iso = neighborhood_distribution(ds, 3, index, crops);
    CHECK(iso.probs == std::vector<double>{0.0, 0.0, 1.0});
    const auto none = neighborhood_distribution(ds, 4, index, crops);
    CHECK(none.empty_neighborhood);
    CHECK(none.probs == std::vector<double>{0.0, 0.0, 0.0});

    CHECK(round_share(3e-5) == 0.0);
    CHECK(round_share(5.1e-5) == 1e-4);
    CHECK(round_share(0.123456) == 0.1235);
}

TEST_CASE("tiny shares round to zero") {
    Dataset ds(2);
    ds.add_parcel({"big", 0, 0, 99'997.0});
    ds.add_parcel({"small", 10, 0, 3.0});
    ds.add_crop({"big", 2019, 0});
    ds.add_crop({"small", 2019, 1});
    ds.finalize();
    const auto d = neighborhood_distribution(ds, 0, build_grid_index(ds), ds.crops_in(2019));
    CHECK(d.probs[1] == 0.0);
    CHECK(d.probs[0] == 1.0);
}

TEST_CASE("distributions are translation invariant and permutation equivariant") {
    const int V = 5;
    const auto ds = random_dataset(300, 77, V);
    const auto moved = random_dataset(300, 77, V, 123'456.0, -98'765.0);
    const auto a = distributions_for_year(ds, 2019, 1);
    const auto b = distributions_for_year(moved, 2019, 3);
    REQUIRE(a.size() == 300);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int c = 0; c < V; ++c) CHECK(std::abs(a[i].probs[c] - b[i].probs[c]) <= 1e-4);
        const double s = std::accumulate(a[i].probs.begin(), a[i].probs.end(), 0.0);
        if (!a[i].empty_neighborhood) CHECK(std::abs(s - 1.0) <= V * 0.5e-4 + 1e-12);
        for (double p : a[i].probs) CHECK((p >= 0.0 && p <= 1.0));
    }

    // reversed parcel order
    Dataset rev(V);
    for (std::size_t i = ds.size(); i-- > 0;) rev.add_parcel(ds.parcel(i));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (auto c = ds.crop_at(i, 2019)) rev.add_crop({ds.parcel(i).parcel_id, 2019, *c});
    }
    rev.finalize();
    const auto r = distributions_for_year(rev, 2019, 2);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(r[ds.size() - 1 - i].probs == a[i].probs);
}

TEST_CASE("distribution cache round-trips") {
    testutil::TempDir dir("dist");
    const auto ds = random_dataset(50, 5, 4);
    const auto d = distributions_for_year(ds, 2019, 1);
    save_distribution_cache(ds, d, dir.file("d.csv"));
    const auto back = load_distribution_cache(ds, dir.file("d.csv"));
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back[i].probs == d[i].probs);
        CHECK(back[i].empty_neighborhood == d[i].empty_neighborhood);
    }
}
