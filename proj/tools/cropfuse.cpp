#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cropfuse/cropdist/distribution.hpp"
#include "cropfuse/eval/metrics.hpp"
#include "cropfuse/features/season_features.hpp"
#include "cropfuse/nn/checkpoint.hpp"
#include "cropfuse/nn/gradcheck.hpp"
#include "cropfuse/prep/pipeline.hpp"
#include "cropfuse/synth/synth.hpp"
#include "cropfuse/train/splits.hpp"
#include "cropfuse/train/trainer.hpp"
#include "cropfuse/util/errors.hpp"
#include "run_config.hpp"

extern char** environ;

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using namespace cropfuse;
using cli::RunConfig;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Thrown for a failed numerical check that is not an exception elsewhere.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string data_file(const RunConfig& c, const char* name) { return (fs::path(c.data_dir) / name).string(); }
std::string cache_file(const RunConfig& c, const std::string& name) {
    return (fs::path(c.cache_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
}

struct Data {
    LabelTaxonomy taxonomy;
    Dataset dataset;
};

Data load_data(const RunConfig& c, bool with_rs) {
    Data d;
    d.taxonomy = load_taxonomy(data_file(c, "taxonomy.csv"));
    d.dataset = load_dataset(data_file(c, "parcels.csv"), data_file(c, "crops.csv"),
                             with_rs ? data_file(c, "rs.csv") : std::string{}, d.taxonomy);
    return d;
}

prep::SmoothTable smooth_table(const RunConfig& c, const Dataset& dataset, bool verbose) {
    const auto path = cache_file(c, "smooth.bin");
    if (fs::exists(path)) return prep::load_smooth_cache(dataset, path);
    auto table = prep::prep_dataset(dataset, c.worker_count(), {}, c.rs_start_year);
    fs::create_directories(c.cache_dir);
    prep::save_smooth_cache(dataset, table, path);
    if (verbose) std::printf("smoothed %zu parcel-seasons (%zu skipped) -> %s\n", table.entries.size(), table.skipped,
                             path.c_str());
    return table;
}

features::FeatureTable feature_table(const RunConfig& c, const Dataset& dataset, bool verbose) {
    const auto path = cache_file(c, "features.bin");
    if (fs::exists(path)) return features::load_feature_cache(dataset, path);
    const auto smooth = smooth_table(c, dataset, verbose);
    auto table = features::compute_features(smooth, c.worker_count());
    fs::create_directories(c.cache_dir);
    features::save_feature_cache(dataset, table, path);
    if (verbose) std::printf("features for %zu parcel-seasons -> %s\n", smooth.entries.size(), path.c_str());
    return table;
}

std::vector<cropdist::DistributionVector> distributions(const RunConfig& c, const Dataset& dataset, int year,
                                                        bool verbose) {
    const auto path = cache_file(c, "dist_" + std::to_string(year) + ".csv");
    if (fs::exists(path)) return cropdist::load_distribution_cache(dataset, path);
    auto dists = cropdist::distributions_for_year(dataset, year, c.worker_count(), c.radius_m);
    fs::create_directories(c.cache_dir);
    cropdist::save_distribution_cache(dataset, dists, path);
    if (verbose) std::printf("distributions of %d -> %s\n", year, path.c_str());
    return dists;
}

train::SplitYears split_years(const RunConfig& c, const Dataset& dataset) {
    return train::SplitYears::ending_at(c.test_year ? c.test_year : train::last_labeled_year(dataset));
}

std::vector<ParcelSequence> sequences(const RunConfig& c, const Dataset& dataset,
                                      const features::FeatureTable& features, int year) {
    SequenceOptions opts;
    opts.steps = c.steps;
    opts.rs_start_year = c.rs_start_year;
    return build_sequences(dataset, features, distributions(c, dataset, year - 1, false), year, opts);
}

nn::Checkpoint load_model(const RunConfig& c) { return nn::load_checkpoint(c.checkpoint_path()); }

/// Test-year predictions of the configured checkpoint.
struct TestRun {
    Data data;
    std::vector<ParcelSequence> test;
    nn::Checkpoint model;
};

TestRun test_run(const RunConfig& c) {
    TestRun t;
    t.model = load_model(c);
    t.data = load_data(c, true);
    if (t.model.params.dims().num_classes != t.data.taxonomy.size()) {
        throw DataError("checkpoint was trained for " + std::to_string(t.model.params.dims().num_classes) +
                        " classes, taxonomy has " + std::to_string(t.data.taxonomy.size()));
    }
    const auto features = feature_table(c, t.data.dataset, false);
    t.test = sequences(c, t.data.dataset, features, split_years(c, t.data.dataset).test);
    return t;
}

int cmd_synth(const RunConfig& c) {
    const auto data = synth::gen_dataset(c.synth, c.worker_count());
    synth::write_dataset(data, c.data_dir);
    std::printf("wrote %zu parcels, seasons %d-%d, K=%d to %s\n", data.dataset.size(), c.synth.first_year(),
                c.synth.last_year, c.synth.num_crops, c.data_dir.c_str());
    return kOk;
}

int cmd_prep(const RunConfig& c) {
    const auto data = load_data(c, true);
    fs::remove(cache_file(c, "smooth.bin"));
    smooth_table(c, data.dataset, true);
    return kOk;
}

int cmd_features(const RunConfig& c) {
    const auto data = load_data(c, true);
    fs::remove(cache_file(c, "features.bin"));
    feature_table(c, data.dataset, true);
    return kOk;
}

int cmd_dist(const RunConfig& c) {
    const auto data = load_data(c, false);
    const auto years = split_years(c, data.dataset);
    for (int y : {years.train - 1, years.dev - 1, years.test - 1}) {
        fs::remove(cache_file(c, "dist_" + std::to_string(y) + ".csv"));
        distributions(c, data.dataset, y, true);
    }
    return kOk;
}

int cmd_train(const RunConfig& c, bool resume) {
    const auto data = load_data(c, true);
    const auto features = feature_table(c, data.dataset, true);
    const auto years = split_years(c, data.dataset);
    const auto train_set = sequences(c, data.dataset, features, years.train);
    const auto dev_set = sequences(c, data.dataset, features, years.dev);

    std::optional<nn::Checkpoint> previous;
    if (resume) previous = load_model(c);
    auto cfg = c.train;
    cfg.dims.num_classes = data.taxonomy.size();

    const auto ckpt_path = c.checkpoint_path();
    const auto log_path = c.log_path();
    for (const auto& p : {ckpt_path, log_path}) {
        const auto parent = fs::path(p).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
    }
    std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
    if (!log) throw DataError("cannot write " + log_path);
    std::printf("training %s on %d (%zu parcels), dev %d (%zu parcels)\n",
                std::string(nn::variant_name(cfg.variant)).c_str(), years.train, train_set.size(), years.dev,
                dev_set.size());
    const auto result = train::train(train_set, dev_set, cfg, previous ? &*previous : nullptr,
                                     [&](const nn::Checkpoint& ck, const train::EpochLog& row) {
                                         nn::save_checkpoint(ck, ckpt_path);
                                         const auto line = train::format_log_line(row);
                                         log << line << '\n' << std::flush;
                                         std::printf("%s\n", line.c_str());
                                         std::fflush(stdout);
                                     });
    if (result.diverged) {
        nn::save_checkpoint(result.checkpoint, ckpt_path);
        throw NumericalFailure("training diverged: " + result.message);
    }
    if (result.log.empty()) nn::save_checkpoint(result.checkpoint, ckpt_path);
    std::printf("best epoch %d, dev accuracy %.4f -> %s\n", result.checkpoint.state.best_epoch,
                result.checkpoint.state.best_dev_acc, ckpt_path.c_str());
    return kOk;
}

int cmd_eval(const RunConfig& c, bool json, const std::string& out) {
    const auto t = test_run(c);
    const auto preds = train::predict(t.model.params, t.test, c.cutoff);
    eval::EvalReport report;
    try {
        report = eval::evaluate(preds, t.data.taxonomy, c.level, c.threshold);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string(e.what()) + " at level " + std::string(level_name(c.level)) + ", threshold " +
                        std::to_string(c.threshold));
    }
    write_text(out, json ? eval::report_json(report) + "\n" : eval::report_tsv(report));
    return kOk;
}

int cmd_predict(const RunConfig& c, Level level, const std::string& out) {
    const auto t = test_run(c);
    const auto preds = train::predict(t.model.params, t.test, c.cutoff);
    std::string text = "parcel_id,predicted,prob\n";
    char buf[64];
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto p = eval::predict_level(t.data.taxonomy, preds.row(i), level);
        std::snprintf(buf, sizeof buf, ",%d,%.6f\n", p.predicted, p.prob);
        text += preds.parcel_ids[i] + buf;
    }
    write_text(out, text);
    return kOk;
}

int cmd_sweep(const RunConfig& c, const std::string& out) {
    const auto t = test_run(c);
    const auto points = train::inseason_sweep(t.model.params, t.test, t.data.taxonomy, c.cutoffs, c.level);
    write_text(out, train::format_sweep(points));
    return kOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    bool ok = true;
    for (auto v : nn::kAllVariants) {
        const auto r = nn::gradcheck(v, nn::tiny_dims(), seed);
        std::printf("%-14s checked %5zu  below 1e-4 %.4f  max %.3e  %s\n", std::string(nn::variant_name(v)).c_str(),
                    r.checked, r.tight_fraction(), r.max_rel_err, r.passed() ? "ok" : ("FAIL at " + r.worst).c_str());
        ok = ok && r.passed();
    }
    if (!ok) throw NumericalFailure("gradient check failed");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crop type classification from rotations, Sentinel-2 series and crop distributions"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string config_path;
    std::optional<std::size_t> workers;
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
        sub->add_option("--workers", workers, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
        return sub;
    };
    // Flags given on the command line override the config file and the environment.
    std::vector<std::pair<std::string, std::string>> overrides;
    const auto opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    };
    const auto data_opts = [&](CLI::App* sub) {
        opt(sub, "--data", "data.dir", "Data directory");
        opt(sub, "--cache", "data.cache", "Cache directory");
        opt(sub, "--test-year", "data.test_year", "Test season (default: last labeled)");
    };

    auto* synth = common(app.add_subcommand("synth", "Generate a synthetic dataset"));
    opt(synth, "--seed", "synth.seed", "Generator seed");
    opt(synth, "--out", "data.dir", "Output directory");
    opt(synth, "--parcels", "synth.parcels", "Number of parcels");
    opt(synth, "--crops", "synth.crops", "Number of crop codes K");
    opt(synth, "--years", "synth.years", "Labeled seasons");
    opt(synth, "--regions", "synth.regions", "Spatial clusters");

    auto* prep = common(app.add_subcommand("prep", "Hampel filter and Whittaker smoothing of every parcel-season"));
    data_opts(prep);
    auto* feats = common(app.add_subcommand("features", "Windowed functionals from the smoothed series"));
    data_opts(feats);
    auto* dist = common(app.add_subcommand("dist", "Neighbourhood crop distributions for the split years"));
    data_opts(dist);
    opt(dist, "--radius", "data.radius_m", "Neighbourhood radius in metres");

    bool resume = false;
    auto* train = common(app.add_subcommand("train", "Train a model with early stopping on the dev year"));
    data_opts(train);
    opt(train, "--variant", "model.variant", "Model variant");
    opt(train, "--epochs", "train.max_epochs", "Maximum epochs");
    opt(train, "--patience", "train.patience", "Early-stopping patience");
    opt(train, "--seed", "train.seed", "Training seed");
    opt(train, "--augment", "train.augment", "In-season augmentation (true/false)");
    opt(train, "--checkpoint", "train.checkpoint", "Checkpoint path");
    opt(train, "--log", "train.log", "Training log path");
    train->add_flag("--resume", resume, "Continue from the checkpoint");

    bool json = false;
    std::string out;
    std::string predict_level = "fine";
    auto* evalc = common(app.add_subcommand("eval", "Evaluate a checkpoint on the test year"));
    data_opts(evalc);
    opt(evalc, "--checkpoint", "train.checkpoint", "Checkpoint path");
    opt(evalc, "--level", "eval.level", "fine, c28, c12 or c10");
    opt(evalc, "--threshold", "eval.threshold", "Keep predictions with probability above this");
    opt(evalc, "--cutoff", "eval.cutoff", "Truncate the test season at this day");
    evalc->add_flag("--json", json, "JSON instead of TSV");
    evalc->add_option("--out", out, "Report file (default: stdout)");

    auto* predict = common(app.add_subcommand("predict", "Per-parcel predictions for the test year"));
    data_opts(predict);
    opt(predict, "--checkpoint", "train.checkpoint", "Checkpoint path");
    opt(predict, "--cutoff", "eval.cutoff", "Truncate the test season at this day");
    predict->add_option("--level", predict_level, "fine, c28, c12 or c10");
    predict->add_option("--out", out, "CSV file (default: stdout)");

    auto* sweep = common(app.add_subcommand("sweep", "Micro-F1 over in-season cutoffs"));
    data_opts(sweep);
    opt(sweep, "--checkpoint", "train.checkpoint", "Checkpoint path");
    opt(sweep, "--cutoffs", "eval.cutoffs", "first:last:step or a comma list");
    opt(sweep, "--level", "eval.level", "fine, c28, c12 or c10");
    sweep->add_option("--out", out, "Table file (default: stdout)");

    std::uint64_t gc_seed = 1;
    auto* gradcheck = common(app.add_subcommand("gradcheck", "Finite-difference check of every variant"));
    gradcheck->add_option("--seed", gc_seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    RunConfig cfg;
    try {
        pt::ptree tree;
        cli::read_config_file(config_path, tree);
        cli::apply_environment(tree, environ);
        for (const auto& [key, value] : overrides) tree.put(pt::ptree::path_type(key, '.'), value);
        if (workers) tree.put(pt::ptree::path_type("data.workers", '.'), std::to_string(*workers));
        cfg = cli::build_config(tree);
    } catch (const cli::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kUsage;
    }

    try {
        if (*synth) return cmd_synth(cfg);
        if (*prep) return cmd_prep(cfg);
        if (*feats) return cmd_features(cfg);
        if (*dist) return cmd_dist(cfg);
        if (*train) return cmd_train(cfg, resume);
        if (*evalc) return cmd_eval(cfg, json, out);
        if (*predict) {
            Level level;
            try {
                level = parse_level(predict_level);
            } catch (const std::invalid_argument& e) {
                std::fprintf(stderr, "%s\n", e.what());
                return kUsage;
            }
            return cmd_predict(cfg, level, out);
        }
        if (*sweep) return cmd_sweep(cfg, out);
        if (*gradcheck) return cmd_gradcheck(gc_seed);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kNumerical;
    } catch (const NumericalFailure& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kNumerical;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const prep::PrepError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
