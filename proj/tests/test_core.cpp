#include <algorithm>
#include <cmath>
#include <chrono>

#include "doctest.h"
#include "test_util.hpp"

#include "cropfuse/core/dataset.hpp"
#include "cropfuse/core/dates.hpp"
#include "cropfuse/core/sequences.hpp"
#include "cropfuse/core/taxonomy.hpp"
#include "cropfuse/util/errors.hpp"

using namespace cropfuse;
using namespace std::chrono;

namespace {

const char* kTaxonomy =
    "crop_code,name,class28,class12,class10\n"
    "0,wheat,0,0,0\n"
    "1,barley,0,0,0\n"
    "2,maize,1,1,1\n"
    "3,grass,2,2,-1\n"
    "4,other,3,3,-1\n"
    "5,rapeseed,4,4,2\n"
    "6,sunflower,5,4,2\n"
    "7,beet,6,5,3\n";

}  // namespace

TEST_CASE("season boundaries") {
    CHECK(season_of(parse_date("2019-10-01")) == 2020);
    CHECK(season_of(parse_date("2020-09-30")) == 2020);
    CHECK(season_of(parse_date("2020-10-01")) == 2021);
    CHECK(season_day(parse_date("2019-10-01")) == 0);
    CHECK(season_day(parse_date("2020-09-30")) == 365);  // season 2020 contains Feb 29
    CHECK(season_length(2020) == 366);
    CHECK(season_length(2019) == 365);
}

TEST_CASE("season_of maps every day of a season to the season") {
    for (int n : {2016, 2019, 2020, 2021}) {
        const sys_days first{season_start(n)};
        const sys_days last{year_month_day{year{n}, September, day{30}}};
        int prev = 0;
        for (sys_days d = first - days{3}; d <= last + days{3}; d += days{1}) {
            const int s = season_of(year_month_day{d});
            CHECK(s >= prev);
            prev = s;
            if (d >= first && d <= last) CHECK(s == n);
        }
    }
}

TEST_CASE("date parsing rejects impossible dates") {
    CHECK_THROWS_AS(parse_date("2019-02-30"), DataError);
    CHECK_THROWS_AS(parse_date("2019-13-01"), DataError);
    CHECK_THROWS_AS(parse_date("20190201"), DataError);
    CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
}

TEST_CASE("taxonomy lookups and consistency") {
    testutil::TempDir dir("taxonomy");
    const auto tax = load_taxonomy(dir.write("taxonomy.csv", kTaxonomy));
    CHECK(tax.size() == 8);
    CHECK(tax.num_classes(Level::C28) == 7);
    CHECK(tax.num_classes(Level::C12) == 6);
    CHECK(tax.num_classes(Level::C10) == 4);
    CHECK(tax.aggregate(5, Level::Fine) == 5);
    CHECK(tax.aggregate(7, Level::C12) == 5);
    CHECK(tax.aggregate(3, Level::C10) == kExcluded);
    CHECK(tax.excluded_c12_groups() == std::vector<CropCode>{2, 3});
    CHECK(parse_level("c12") == Level::C12);
    CHECK_THROWS_AS(parse_level("c7"), std::invalid_argument);

    save_taxonomy(tax, dir.file("copy.csv"));
    const auto back = load_taxonomy(dir.file("copy.csv"));
    for (CropCode c = 0; c < 8; ++c) {
        for (Level l : {Level::C28, Level::C12, Level::C10}) CHECK(back.aggregate(c, l) == tax.aggregate(c, l));
    }
}

TEST_CASE("taxonomy rejects inconsistent maps") {
    using E = LabelTaxonomy::Entry;
    // c12 not a coarsening of c28: c28 group 0 split over two c12 groups
    CHECK_THROWS(LabelTaxonomy({E{0, "a", 0, 0, 0}, E{1, "b", 0, 1, 1}}));
    // c10 excludes only part of a c12 group
    CHECK_THROWS(LabelTaxonomy({E{0, "a", 0, 0, 0}, E{1, "b", 1, 0, -1}}));
    // missing code 1
    CHECK_THROWS(LabelTaxonomy({E{0, "a", 0, 0, 0}, E{2, "b", 1, 1, 1}}));
}

TEST_CASE("load_dataset echoes a small input") {
    testutil::TempDir dir("dataset");
    const auto tax = load_taxonomy(dir.write("taxonomy.csv", kTaxonomy));
    const auto parcels = dir.write("parcels.csv",
                                   "parcel_id,centroid_x_m,centroid_y_m,area_ha\n"
                                   "p1,100,200,1.5\np2,300,400,2\np3,500,600,0.75\n");
    const auto crops = dir.write("crops.csv",
                                 "parcel_id,season_year,crop_code\n"
                                 "p1,2019,0\np1,2020,2\np2,2019,3\np2,2020,3\np3,2019,7\np3,2020,5\n");
    const auto rs = dir.write("rs.csv",
                              "parcel_id,date,b4,b8a,lai,fapar\n"
                              "p1,2019-10-05,0.05,0.3,1.2,0.4\n"
                              "p1,2019-10-01,0.06,,1.1,0.38\n");
    const auto ds = load_dataset(parcels, crops, rs, tax);
    CHECK(ds.size() == 3);
    for (std::size_t p = 0; p < 3; ++p) CHECK(ds.crops_of(p).size() == 2);
    CHECK(ds.crop_at(*ds.find("p3"), 2020) == 5);
    CHECK(!ds.crop_at(0, 2018).has_value());
    const auto& s = ds.samples_of(0);
    REQUIRE(s.size() == 2);
    CHECK(s[0].date == parse_date("2019-10-01"));  // sorted by date
    CHECK(std::isnan(s[0].values[kB8A]));
    CHECK(ds.rs_seasons(0) == std::vector<int>{2020});

    // round trip through the writers
    save_parcels(ds, dir.file("p2.csv"));
    save_crops(ds, dir.file("c2.csv"));
    save_rs(ds, dir.file("r2.csv"));
    const auto again = load_dataset(dir.file("p2.csv"), dir.file("c2.csv"), dir.file("r2.csv"), tax);
    CHECK(again.size() == 3);
    CHECK(again.parcel(1).area_ha == 2.0);
    CHECK(std::isnan(again.samples_of(0)[0].values[kB8A]));
}

TEST_CASE("load_dataset reports file, line and column") {
    testutil::TempDir dir("dataset_errors");
    const auto tax = load_taxonomy(dir.write("taxonomy.csv", kTaxonomy));
    const auto parcels = dir.write("parcels.csv", "parcel_id,centroid_x_m,centroid_y_m,area_ha\np1,0,0,1\n");
    auto message = [&](const std::string& crops, const std::string& rs) {
        try {
            load_dataset(parcels, dir.write("crops.csv", crops), rs.empty() ? "" : dir.write("rs.csv", rs), tax);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const std::string h = "parcel_id,season_year,crop_code\n";
    const auto range = message(h + "p1,2019,8\n", "");
    CHECK(range.find("crop code out of range") != std::string::npos);
    CHECK(range.find("crops.csv:2") != std::string::npos);
    CHECK(message(h + "p1,2019,1\np1,2019,2\n", "").find("duplicate") != std::string::npos);
    CHECK(message(h + "p9,2019,1\n", "").find("unknown parcel") != std::string::npos);
    const auto date = message(h, "parcel_id,date,b4,b8a,lai,fapar\np1,2019-02-30,0.1,0.2,1,0.5\n");
    CHECK(date.find("rs.csv:2") != std::string::npos);
    CHECK(date.find("date") != std::string::npos);
    CHECK(message(h + "p1,abc,1\n", "").find("season_year") != std::string::npos);
    CHECK(message("parcel,year,code\n", "").find("header") != std::string::npos);
}

TEST_CASE("build_sequences aligns history and pads") {
    Dataset ds(8);
    ds.add_parcel({"a", 0, 0, 1});
    ds.add_parcel({"b", 0, 0, 1});
    ds.add_parcel({"c", 0, 0, 1});
    for (int y = 2009; y <= 2020; ++y) ds.add_crop({"a", y, y % 3});
    ds.add_crop({"b", 2018, 4});
    ds.add_crop({"c", 2017, 1});
    ds.finalize();
    features::FeatureTable table;
    for (int y = 2014; y <= 2020; ++y) {
        auto f = std::make_shared<features::SeasonFeatures>();
        f->values.fill(static_cast<float>(y));
        table.insert(0, y, f);
    }
    const auto seqs = build_sequences(ds, table, {}, 2018);
    REQUIRE(seqs.size() == 2);
    const auto& a = seqs[0];
    REQUIRE(a.steps.size() == 10);
    for (int i = 0; i < 10; ++i) {
        const auto& st = a.steps[i];
        const int y = 2009 + i;
        CHECK(st.season_year == y);
        CHECK(st.label == y % 3);
        CHECK(st.prev_crop == (y == 2009 ? 8 : (y - 1) % 3));
        // RS before 2016 is never used, even when features exist
        CHECK(st.has_features() == (y >= 2016));
    }
    CHECK(a.target() == 2018 % 3);
    CHECK(a.dist.empty_neighborhood);
    CHECK(a.dist.probs == std::vector<double>(8, 0.0));

    const auto& b = seqs[1];
    CHECK(b.parcel_id == "b");
    int unknown = 0;
    for (const auto& st : b.steps) unknown += st.prev_crop == 8;
    CHECK(unknown == 10);  // labeled in the target year only: no known previous crop
    int unknown_labels = 0;
    for (std::size_t i = 0; i + 1 < b.steps.size(); ++i) unknown_labels += b.steps[i].label == 8;
    CHECK(unknown_labels == 9);
    CHECK(b.target() == 4);
    CHECK(zero_features().is_zero());
    CHECK(b.steps[3].features_or_zero().is_zero());

    CHECK_THROWS_AS(build_sequences(ds, table, {}, 2005), DataError);
}
