// Throughput of prep + features on synthetic parcels at 1 and all workers.
#include <sys/resource.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "cropfuse/features/season_features.hpp"
#include "cropfuse/prep/pipeline.hpp"
#include "cropfuse/synth/synth.hpp"
#include "cropfuse/util/parallel.hpp"

using namespace cropfuse;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

long peak_rss_mb() {
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return u.ru_maxrss / 1024;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Timing {
    double prep = 0, features = 0;
    std::string cache;
};

Timing run(const Dataset& dataset, std::size_t workers, const std::string& cache) {
    Timing t;
    auto start = Clock::now();
    const auto smooth = prep::prep_dataset(dataset, workers);
    t.prep = seconds_since(start);
    start = Clock::now();
    const auto table = features::compute_features(smooth, workers);
    t.features = seconds_since(start);
    features::save_feature_cache(dataset, table, cache);
    t.cache = slurp(cache);
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prep + features throughput"};
    std::size_t parcels = 10'000;
    std::size_t workers = default_workers();
    std::uint64_t seed = 7;
    app.add_option("--parcels", parcels, "Synthetic parcels")->check(CLI::PositiveNumber);
    app.add_option("--workers", workers, "Parallel worker count")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);

    synth::SynthConfig cfg;
    cfg.num_parcels = parcels;
    cfg.seed = seed;
    auto start = Clock::now();
    const auto data = synth::gen_dataset(cfg, workers);
    std::printf("synth\t%zu parcels\t%.2f s\n", parcels, seconds_since(start));

    const auto dir = std::filesystem::temp_directory_path() / ("bench_prep_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto one = run(data.dataset, 1, (dir / "w1.bin").string());
    const auto many = run(data.dataset, workers, (dir / "wn.bin").string());
    std::filesystem::remove_all(dir);

    const double n = static_cast<double>(parcels);
    std::printf("workers\tprep_s\tfeatures_s\tparcels_per_s\n");
    std::printf("1\t%.2f\t%.2f\t%.1f\n", one.prep, one.features, n / (one.prep + one.features));
    std::printf("%zu\t%.2f\t%.2f\t%.1f\n", workers, many.prep, many.features, n / (many.prep + many.features));
    const double speedup = (one.prep + one.features) / (many.prep + many.features);
    const bool identical = one.cache == many.cache;
    std::printf("speedup\t%.2f\nidentical_caches\t%s\npeak_rss_mb\t%ld\n", speedup, identical ? "yes" : "no",
                peak_rss_mb());

    if (!identical) return 1;
    if (workers >= 4 && default_workers() >= 4 && speedup <= 1.5) {
        std::printf("speedup below 1.5x on %zu workers\n", workers);
        return 1;
    }
    return 0;
}
