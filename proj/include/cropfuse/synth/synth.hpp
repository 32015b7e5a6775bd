#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cropfuse/core/dataset.hpp"
#include "cropfuse/core/taxonomy.hpp"
#include "cropfuse/prep/series.hpp"

namespace cropfuse::synth {

struct SynthConfig {
    int num_crops = 10;  // K
    std::size_t num_parcels = 5000;
    int years = 10;
    int last_year = 2020;
    int regions = 4;
    double sharpness = 8.0;  // alpha
    double shift_days = 45.0;  // sigma of the per parcel-season phenology shift
    double noise = 0.01;     // sigma of reflectance noise; LAI noise is 10 sigma
    double cloud_rate = 0.25;
    double spike_rate = 0.04;  // share of kept samples with an injected B4 spike
    int rs_start_year = 2016;
    double region_spacing_m = 60'000.0;
    double region_spread_m = 6'000.0;
    std::uint64_t seed = 7;

    int first_year() const { return last_year - years + 1; }
    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Double-logistic LAI: base + amp * (rise(d) - fall(d)) * dip(d), where
/// dip is a Gaussian notch of relative depth cut_depth around cut_day
/// (mowing); cut_depth 0 means no cut.
struct Phenology {
    double sow_day = 0.0;
    double harvest_day = 0.0;
    double rise_days = 15.0;
    double fall_days = 12.0;
    double peak_lai = 4.0;
    double base_lai = 0.2;
    double cut_depth = 0.0;
    double cut_day = 0.0;
    double cut_width = 12.0;
};

double lai_at(const Phenology& p, double day);
double fapar_from_lai(double lai);
double b8a_from_fapar(double fapar);
double b4_from_fapar(double fapar);

/// Everything drawn once per configuration.
struct World {
    std::vector<Phenology> crops;
    std::vector<std::vector<std::vector<double>>> transitions;  // [region][from][to]
    std::vector<std::vector<double>> initial;                   // [region][crop]
    std::vector<std::array<double, 2>> centers;
};

/// K x K matrix with P[i][j] proportional to exp(alpha * u_ij), u ~ U(0, 1).
std::vector<std::vector<double>> sharpened_transitions(int k, double alpha, std::mt19937_64& rng);

World make_world(const SynthConfig& config);

struct ParcelDraw {
    ParcelRecord record;
    int region = 0;
    std::vector<CropCode> crops;  // first_year .. last_year
};

/// Parcel locations and Markov rotations, one split RNG stream per parcel.
std::vector<ParcelDraw> gen_rotations(const SynthConfig& config, const World& world, std::size_t workers = 1);

struct SignalDraw {
    Phenology phenology;  // after per parcel-season jitter
    prep::RawSeries raw;
    std::vector<std::size_t> spikes;  // sample indices with an injected B4 spike
};

/// One parcel-season of observations on an irregular 3-7 day grid.
SignalDraw gen_signals(CropCode crop, int season_year, const SynthConfig& config, const World& world,
                       std::mt19937_64& rng);

/// K fine codes: class28 = code, class12 = code mod ceil(K/2), and c10
/// drops the last c12 group.
LabelTaxonomy synth_taxonomy(int num_crops);

struct SynthData {
    World world;
    LabelTaxonomy taxonomy;
    Dataset dataset;
    std::vector<int> regions;  // per parcel
};

/// Pure function of the config; `workers` only changes speed.
SynthData gen_dataset(const SynthConfig& config, std::size_t workers = 1);

/// Writes parcels.csv, crops.csv, rs.csv and taxonomy.csv into `dir`.
void write_dataset(const SynthData& data, const std::string& dir);

}  // namespace cropfuse::synth
