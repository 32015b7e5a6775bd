#include "run_config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "cropfuse/util/parallel.hpp"

namespace cropfuse::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"data", {"dir", "cache", "run", "test_year", "steps", "rs_start_year", "radius_m", "workers"}},
        {"model",
         {"variant", "embed_dim", "rs_dim", "window_hidden", "attention_dim", "year_hidden", "year_layers"}},
        {"train",
         {"lr", "batch_size", "max_epochs", "patience", "seed", "augment", "precision", "checkpoint", "log"}},
        {"eval", {"level", "threshold", "cutoffs", "cutoff"}},
        {"synth",
         {"crops", "parcels", "years", "last_year", "regions", "sharpness", "shift_days", "noise", "cloud_rate",
          "spike_rate", "seed"}},
    };
    return keys;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const std::string t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError("config: " + key + ": cannot parse '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw ConfigError("config: " + key + ": expected a boolean, got '" + text + "'");
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    const std::string* find(const std::string& key) const {
        const auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'));
        return node ? &node->data() : nullptr;
    }
    void str(const std::string& key, std::string& out) const {
        if (const auto* v = find(key)) out = trim(*v);
    }
    template <typename T>
    void num(const std::string& key, T& out) const {
        if (const auto* v = find(key)) out = parse_number<T>(key, *v);
    }
    void flag(const std::string& key, bool& out) const {
        if (const auto* v = find(key)) out = parse_bool(key, *v);
    }

private:
    const pt::ptree& tree_;
};

}  // namespace

std::size_t RunConfig::worker_count() const { return workers ? workers : default_workers(); }

std::vector<int> parse_cutoffs(const std::string& text) {
    std::vector<int> out;
    const std::string t = trim(text);
    if (t.find(':') != std::string::npos) {
        std::vector<int> parts;
        std::size_t start = 0;
        for (;;) {
            const auto colon = t.find(':', start);
            parts.push_back(parse_number<int>("cutoffs", t.substr(start, colon - start)));
            if (colon == std::string::npos) break;
            start = colon + 1;
        }
        if (parts.size() != 3 || parts[2] <= 0 || parts[0] > parts[1]) {
            throw ConfigError("config: cutoffs: expected first:last:step, got '" + text + "'");
        }
        for (int c = parts[0]; c < parts[1]; c += parts[2]) out.push_back(c);
        out.push_back(parts[1]);
    } else {
        std::size_t start = 0;
        for (;;) {
            const auto comma = t.find(',', start);
            out.push_back(parse_number<int>("cutoffs", t.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    for (int c : out) {
        if (c < 1 || c > 365) throw ConfigError("config: cutoffs must lie in [1, 365]");
    }
    return out;
}

void read_config_file(const std::string& path, pt::ptree& tree) {
    if (path.empty()) return;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
}

void apply_environment(pt::ptree& tree, char** envp) {
    const std::string prefix = kEnvPrefix;
    for (char** e = envp; e && *e; ++e) {
        const std::string entry = *e;
        if (entry.rfind(prefix, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(prefix.size(), eq - prefix.size());
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        const auto sep = name.find('_');
        if (sep == std::string::npos) throw ConfigError("config: bad environment override " + entry.substr(0, eq));
        tree.put(pt::ptree::path_type(name.substr(0, sep) + "." + name.substr(sep + 1), '.'),
                 entry.substr(eq + 1));
    }
}

RunConfig build_config(const pt::ptree& tree) {
    const auto& keys = known_keys();
    for (const auto& [section, node] : tree) {
        const auto it = keys.find(section);
        if (it == keys.end() || !node.data().empty()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : node) {
            if (!it->second.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
        }
    }

    RunConfig c;
    const Reader r(tree);
    r.str("data.dir", c.data_dir);
    r.str("data.cache", c.cache_dir);
    r.str("data.run", c.run_dir);
    r.num("data.test_year", c.test_year);
    r.num("data.steps", c.steps);
    r.num("data.rs_start_year", c.rs_start_year);
    r.num("data.radius_m", c.radius_m);
    r.num("data.workers", c.workers);
    if (c.steps < 1) throw ConfigError("config: data.steps must be >= 1");
    if (!(c.radius_m > 0)) throw ConfigError("config: data.radius_m must be > 0");

    c.train = train::TrainConfig::desk_scale();
    auto& t = c.train;
    auto& d = t.dims;
    if (const auto* v = r.find("model.variant")) {
        try {
            t.variant = nn::parse_variant(trim(*v));
        } catch (const std::exception& e) {
            throw ConfigError("config: model.variant: " + std::string(e.what()));
        }
    }
    r.num("model.embed_dim", d.embed_dim);
    r.num("model.rs_dim", d.rs_dim);
    r.num("model.window_hidden", d.window_hidden);
    r.num("model.attention_dim", d.attention_dim);
    r.num("model.year_hidden", d.year_hidden);
    r.num("model.year_layers", d.year_layers);
    for (int x : {d.embed_dim, d.rs_dim, d.window_hidden, d.attention_dim, d.year_hidden, d.year_layers}) {
        if (x < 1) throw ConfigError("config: model sizes must be >= 1");
    }
    r.num("train.lr", t.lr);
    r.num("train.batch_size", t.batch_size);
    r.num("train.max_epochs", t.max_epochs);
    r.num("train.patience", t.patience);
    r.num("train.seed", t.seed);
    r.flag("train.augment", t.augment);
    if (const auto* v = r.find("train.precision")) {
        const std::string p = trim(*v);
        if (p == "f32") t.precision = train::Precision::F32;
        else if (p == "f64") t.precision = train::Precision::F64;
        else throw ConfigError("config: train.precision must be f32 or f64");
    }
    r.str("train.checkpoint", c.checkpoint);
    r.str("train.log", c.log);
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }

    if (const auto* v = r.find("eval.level")) {
        try {
            c.level = parse_level(trim(*v));
        } catch (const std::exception& e) {
            throw ConfigError("config: eval.level: " + std::string(e.what()));
        }
    }
    r.num("eval.threshold", c.threshold);
    if (!(c.threshold >= 0.0 && c.threshold < 1.0)) throw ConfigError("config: eval.threshold must lie in [0, 1)");
    c.cutoffs = train::sweep_cutoffs();
    if (const auto* v = r.find("eval.cutoffs")) c.cutoffs = parse_cutoffs(*v);
    r.num("eval.cutoff", c.cutoff);
    if (c.cutoff < 1 || c.cutoff > 365) throw ConfigError("config: eval.cutoff must lie in [1, 365]");

    auto& s = c.synth;
    r.num("synth.crops", s.num_crops);
    r.num("synth.parcels", s.num_parcels);
    r.num("synth.years", s.years);
    r.num("synth.last_year", s.last_year);
    r.num("synth.regions", s.regions);
    r.num("synth.sharpness", s.sharpness);
    r.num("synth.shift_days", s.shift_days);
    r.num("synth.noise", s.noise);
    r.num("synth.cloud_rate", s.cloud_rate);
    r.num("synth.spike_rate", s.spike_rate);
    r.num("synth.seed", s.seed);
    s.rs_start_year = c.rs_start_year;
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    return c;
}

}  // namespace cropfuse::cli
