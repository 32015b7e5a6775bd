#pragma once

#include <boost/property_tree/ptree.hpp>
#include <cstddef>
#include <string>
#include <vector>

#include "cropfuse/core/taxonomy.hpp"
#include "cropfuse/synth/synth.hpp"
#include "cropfuse/train/trainer.hpp"

namespace cropfuse::cli {

inline constexpr const char* kEnvPrefix = "CROPFUSE_";

/// Bad config contents; reported as a usage error.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    // [data]
    std::string data_dir = "data";
    std::string cache_dir = "cache";
    std::string run_dir = "run";
    int test_year = 0;  // 0 = last labeled season
    int steps = 10;
    int rs_start_year = 2016;
    double radius_m = 10'000.0;
    std::size_t workers = 0;  // 0 = available parallelism
    // [model] + [train]
    train::TrainConfig train;
    std::string checkpoint;  // default <run>/model.ckpt
    std::string log;         // default <run>/train.log
    // [eval]
    Level level = Level::C10;
    double threshold = 0.0;
    std::vector<int> cutoffs;
    int cutoff = 365;
    // [synth]
    synth::SynthConfig synth;

    std::string checkpoint_path() const { return checkpoint.empty() ? run_dir + "/model.ckpt" : checkpoint; }
    std::string log_path() const { return log.empty() ? run_dir + "/train.log" : log; }
    std::size_t worker_count() const;
};

/// "a:b:step" (b always included) or a comma separated list.
std::vector<int> parse_cutoffs(const std::string& text);

/// Reads an INI file into `tree` (missing path = nothing to read).
void read_config_file(const std::string& path, boost::property_tree::ptree& tree);

/// Applies CROPFUSE_<SECTION>_<KEY> variables from the environment.
void apply_environment(boost::property_tree::ptree& tree, char** envp);

/// Builds the typed config. Throws ConfigError on unknown sections or keys
/// and on unparsable or out-of-range values.
RunConfig build_config(const boost::property_tree::ptree& tree);

}  // namespace cropfuse::cli
