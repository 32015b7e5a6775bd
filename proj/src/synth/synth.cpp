#include "cropfuse/synth/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "cropfuse/core/dates.hpp"
#include "cropfuse/prep/hampel.hpp"
#include "cropfuse/util/parallel.hpp"

namespace cropfuse::synth {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::initializer_list<std::uint32_t> keys) {
    std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    material.insert(material.end(), keys.begin(), keys.end());
    std::seed_seq seq(material.begin(), material.end());
    return std::mt19937_64(seq);
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t draw_index(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    return pick(rng);
}

}  // namespace

void SynthConfig::validate() const {
    if (num_crops < 2) throw std::invalid_argument("synth: K must be >= 2");
    if (num_parcels < 1) throw std::invalid_argument("synth: need at least one parcel");
    if (years < 1) throw std::invalid_argument("synth: years must be >= 1");
    if (regions < 1) throw std::invalid_argument("synth: regions must be >= 1");
    if (!(sharpness >= 0.0)) throw std::invalid_argument("synth: sharpness must be >= 0");
    if (!(shift_days >= 0.0)) throw std::invalid_argument("synth: shift must be >= 0");
    if (!(noise >= 0.0)) throw std::invalid_argument("synth: noise must be >= 0");
    if (!(cloud_rate >= 0.0 && cloud_rate < 1.0)) throw std::invalid_argument("synth: cloud rate must lie in [0, 1)");
    if (!(spike_rate >= 0.0 && spike_rate <= 1.0)) throw std::invalid_argument("synth: spike rate must lie in [0, 1]");
    if (!(region_spread_m > 0.0 && region_spacing_m >= 0.0)) throw std::invalid_argument("synth: bad region geometry");
}

double lai_at(const Phenology& p, double day) {
    const double amp = p.peak_lai - p.base_lai;
    double v = amp * (logistic((day - p.sow_day) / p.rise_days) - logistic((day - p.harvest_day) / p.fall_days));
    if (p.cut_depth > 0.0) {
        const double z = (day - p.cut_day) / p.cut_width;
        v *= 1.0 - p.cut_depth * std::exp(-z * z);
    }
    v += p.base_lai;
    return std::max(0.0, v);
}

double fapar_from_lai(double lai) { return 1.0 - std::exp(-0.5 * lai); }
double b8a_from_fapar(double fapar) { return 0.15 + 0.35 * fapar; }
double b4_from_fapar(double fapar) { return 0.12 - 0.09 * fapar; }

std::vector<std::vector<double>> sharpened_transitions(int k, double alpha, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> p(k, std::vector<double>(k));
    for (auto& row : p) {
        for (auto& x : row) x = alpha * u(rng);
        const double top = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (auto& x : row) sum += (x = std::exp(x - top));
        for (auto& x : row) x /= sum;
    }
    return p;
}

World make_world(const SynthConfig& config) {
    config.validate();
    auto rng = stream(config.seed, {0u});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    World w;
    const int k = config.num_crops;
    const int clusters = (k + 1) / 2;
    std::vector<Phenology> centers(clusters);
    for (int j = 0; j < clusters; ++j) {
        Phenology& c = centers[j];
        c.sow_day = 60.0 + 120.0 * u(rng);
        c.harvest_day = c.sow_day + 100.0 + 70.0 * u(rng);
        c.rise_days = 10.0 + 10.0 * u(rng);
        c.fall_days = 8.0 + 7.0 * u(rng);
        c.peak_lai = 2.5 + 3.5 * u(rng);
        c.base_lai = 0.1 + 0.3 * u(rng);
        if (j % 2 == 1) c.cut_depth = 0.5 + 0.2 * u(rng);
    }
    for (int c = 0; c < k; ++c) {
        Phenology p = centers[c / 2];
        p.sow_day += 6.0 * u(rng) - 3.0;
        p.harvest_day += 6.0 * u(rng) - 3.0;
        p.peak_lai *= 0.9 + 0.2 * u(rng);
        w.crops.push_back(p);
    }
    for (int r = 0; r < config.regions; ++r) {
        w.transitions.push_back(sharpened_transitions(k, config.sharpness, rng));
        std::vector<double> prior(k);
        for (auto& x : prior) x = std::exp(config.sharpness * u(rng));
        double sum = 0.0;
        for (double x : prior) sum += x;
        for (auto& x : prior) x /= sum;
        w.initial.push_back(prior);
    }
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.regions))));
    for (int r = 0; r < config.regions; ++r) {
        w.centers.push_back({100'000.0 + config.region_spacing_m * (r % cols),
                             400'000.0 + config.region_spacing_m * (r / cols)});
    }
    return w;
}

std::vector<ParcelDraw> gen_rotations(const SynthConfig& config, const World& world, std::size_t workers) {
    config.validate();
    std::vector<ParcelDraw> out(config.num_parcels);
    parallel_for(config.num_parcels, workers, [&](std::size_t i) {
        auto rng = stream(config.seed, {1u, static_cast<std::uint32_t>(i)});
        std::normal_distribution<double> n01(0.0, 1.0);
        ParcelDraw& d = out[i];
        d.region = static_cast<int>(i % static_cast<std::size_t>(config.regions));
        char id[32];
        std::snprintf(id, sizeof id, "P%06zu", i);
        d.record.parcel_id = id;
        const auto& c = world.centers[d.region];
        d.record.centroid_x = std::round((c[0] + config.region_spread_m * n01(rng)) * 10.0) / 10.0;
        d.record.centroid_y = std::round((c[1] + config.region_spread_m * n01(rng)) * 10.0) / 10.0;
        d.record.area_ha = std::max(0.1, round4(std::exp(std::log(3.0) + 0.6 * n01(rng))));
        CropCode crop = static_cast<CropCode>(draw_index(world.initial[d.region], rng));
        for (int y = 0; y < config.years; ++y) {
            if (y > 0) crop = static_cast<CropCode>(draw_index(world.transitions[d.region][crop], rng));
            d.crops.push_back(crop);
        }
    });
    return out;
}

SignalDraw gen_signals(CropCode crop, int season_year, const SynthConfig& config, const World& world,
                       std::mt19937_64& rng) {
    if (crop < 0 || crop >= static_cast<CropCode>(world.crops.size())) {
        throw std::invalid_argument("synth: crop code out of range");
    }
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> step(3, 7), first(0, 6);

    SignalDraw out;
    Phenology& p = out.phenology;
    p = world.crops[crop];
    const double shift = config.shift_days * n01(rng);
    p.sow_day += shift + 4.0 * n01(rng);
    p.harvest_day = std::max(p.sow_day + 40.0, p.harvest_day + shift + 4.0 * n01(rng));
    p.peak_lai *= 0.85 + 0.3 * u(rng);
    p.cut_day = p.sow_day + (0.35 + 0.3 * u(rng)) * (p.harvest_day - p.sow_day);

    const double s = config.noise;
    const int len = season_length(season_year);
    std::vector<double> spike_sizes;
    for (int d = first(rng); d < len; d += step(rng)) {
        const bool cloudy = u(rng) < config.cloud_rate;
        const bool spike = u(rng) < config.spike_rate;
        const double e[4] = {n01(rng), n01(rng), n01(rng), n01(rng)};
        const double spike_size = 0.25 + 0.2 * u(rng);
        if (cloudy) continue;
        const double lai = lai_at(p, d);
        const double fapar = fapar_from_lai(lai);
        out.raw.days.push_back(d);
        out.raw.values[kB4].push_back(std::clamp(b4_from_fapar(fapar) + s * e[0], 0.0, 1.2));
        out.raw.values[kB8A].push_back(round4(std::clamp(b8a_from_fapar(fapar) + s * e[1], 0.0, 1.2)));
        out.raw.values[kLAI].push_back(round4(std::max(0.0, lai + 10.0 * s * e[2])));
        out.raw.values[kFAPAR].push_back(round4(std::clamp(fapar + s * e[3], 0.0, 1.0)));
        spike_sizes.push_back(spike ? spike_size : 0.0);
    }

    // a spike needs three clean neighbours within the Hampel half window
    const int reach = prep::HampelOptions{}.half_window_days;
    const auto& days = out.raw.days;
    auto& b4 = out.raw.values[kB4];
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (spike_sizes[i] == 0.0) continue;
        if (!out.spikes.empty() && days[i] - days[out.spikes.back()] <= reach) continue;
        int clean = 0;
        for (std::size_t j = 0; j < days.size(); ++j) clean += j != i && std::abs(days[j] - days[i]) <= reach;
        if (clean < 3) continue;
        b4[i] = std::min(1.2, b4[i] + spike_sizes[i]);
        out.spikes.push_back(i);
    }
    for (auto& x : b4) x = round4(x);
    return out;
}

LabelTaxonomy synth_taxonomy(int num_crops) {
    if (num_crops < 2) throw std::invalid_argument("synth: K must be >= 2");
    const int groups = (num_crops + 1) / 2;
    std::vector<LabelTaxonomy::Entry> entries;
    for (int c = 0; c < num_crops; ++c) {
        const CropCode g = c % groups;
        const CropCode c10 = g == groups - 1 ? kExcluded : g;
        entries.push_back({c, "crop" + std::to_string(c), c, g, c10});
    }
    return LabelTaxonomy(std::move(entries));
}

SynthData gen_dataset(const SynthConfig& config, std::size_t workers) {
    SynthData out;
    out.world = make_world(config);
    out.taxonomy = synth_taxonomy(config.num_crops);
    const auto parcels = gen_rotations(config, out.world, workers);
    const int first_rs = std::max(config.rs_start_year, config.first_year());

    std::vector<std::vector<RsSample>> samples(parcels.size());
    parallel_for(parcels.size(), workers, [&](std::size_t i) {
        for (int year = first_rs; year <= config.last_year; ++year) {
            auto rng = stream(config.seed, {2u, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(year)});
            const CropCode crop = parcels[i].crops[year - config.first_year()];
            const auto draw = gen_signals(crop, year, config, out.world, rng);
            const auto start = std::chrono::sys_days(season_start(year));
            for (std::size_t j = 0; j < draw.raw.size(); ++j) {
                RsSample s;
                s.date = Date(start + std::chrono::days(draw.raw.days[j]));
                for (std::size_t k = 0; k < kNumSignals; ++k) s.values[k] = draw.raw.values[k][j];
                samples[i].push_back(s);
            }
        }
    });

    out.dataset = Dataset(config.num_crops);
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        const std::size_t id = out.dataset.add_parcel(parcels[i].record);
        out.regions.push_back(parcels[i].region);
        for (int y = 0; y < config.years; ++y) {
            out.dataset.add_crop({parcels[i].record.parcel_id, config.first_year() + y, parcels[i].crops[y]});
        }
        for (const auto& s : samples[i]) out.dataset.add_sample(id, s);
    }
    out.dataset.finalize();
    return out;
}

void write_dataset(const SynthData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_parcels(data.dataset, (base / "parcels.csv").string());
    save_crops(data.dataset, (base / "crops.csv").string());
    save_rs(data.dataset, (base / "rs.csv").string());
    save_taxonomy(data.taxonomy, (base / "taxonomy.csv").string());
}

}  // namespace cropfuse::synth
