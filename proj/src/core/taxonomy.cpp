#include "cropfuse/core/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "cropfuse/util/csv.hpp"
#include "cropfuse/util/errors.hpp"

namespace cropfuse {

Level parse_level(std::string_view name) {
    if (name == "fine") return Level::Fine;
    if (name == "c28") return Level::C28;
    if (name == "c12") return Level::C12;
    if (name == "c10") return Level::C10;
    throw std::invalid_argument("unknown level '" + std::string(name) + "'");
}

std::string_view level_name(Level level) {
    switch (level) {
        case Level::Fine: return "fine";
        case Level::C28: return "c28";
        case Level::C12: return "c12";
        case Level::C10: return "c10";
    }
    return "?";
}

LabelTaxonomy::LabelTaxonomy(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.code < b.code; });
    if (entries_.empty()) throw DataError("taxonomy: no entries");
    std::map<CropCode, CropCode> c28_to_c12;
    std::map<CropCode, CropCode> c12_to_c10;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.code != static_cast<CropCode>(i)) {
            throw DataError("taxonomy: crop codes must be 0..V-1 without gaps (missing " + std::to_string(i) + ")");
        }
        if (e.class28 < 0 || e.class12 < 0 || e.class10 < kExcluded) {
            throw DataError("taxonomy: negative class for code " + std::to_string(e.code));
        }
        const auto [it28, fresh28] = c28_to_c12.emplace(e.class28, e.class12);
        if (!fresh28 && it28->second != e.class12) {
            throw DataError("taxonomy: class12 is not a coarsening of class28 (code " + std::to_string(e.code) + ")");
        }
        const auto [it12, fresh12] = c12_to_c10.emplace(e.class12, e.class10);
        if (!fresh12 && it12->second != e.class10) {
            throw DataError("taxonomy: class10 must exclude or keep whole class12 groups (code " +
                            std::to_string(e.code) + ")");
        }
        n28_ = std::max(n28_, e.class28 + 1);
        n12_ = std::max(n12_, e.class12 + 1);
        n10_ = std::max(n10_, e.class10 + 1);
    }
    std::map<CropCode, CropCode> c10_to_c12;
    for (const auto& [g12, g10] : c12_to_c10) {
        if (g10 == kExcluded) {
            excluded12_.push_back(g12);
        } else if (!c10_to_c12.emplace(g10, g12).second) {
            throw DataError("taxonomy: class10 " + std::to_string(g10) + " maps from several class12 groups");
        }
    }
}

int LabelTaxonomy::num_classes(Level level) const {
    switch (level) {
        case Level::Fine: return size();
        case Level::C28: return n28_;
        case Level::C12: return n12_;
        case Level::C10: return n10_;
    }
    return 0;
}

const LabelTaxonomy::Entry& LabelTaxonomy::entry(CropCode code) const {
    if (code < 0 || code >= size()) throw std::out_of_range("crop code out of range: " + std::to_string(code));
    return entries_[static_cast<std::size_t>(code)];
}

CropCode LabelTaxonomy::aggregate(CropCode code, Level level) const {
    const auto& e = entry(code);
    switch (level) {
        case Level::Fine: return e.code;
        case Level::C28: return e.class28;
        case Level::C12: return e.class12;
        case Level::C10: return e.class10;
    }
    throw std::invalid_argument("unknown level");
}

LabelTaxonomy load_taxonomy(const std::string& path) {
    csv::Reader reader(path, "crop_code,name,class28,class12,class10");
    std::vector<LabelTaxonomy::Entry> entries;
    while (reader.next()) {
        entries.push_back({static_cast<CropCode>(reader.as_int(0)), reader.field(1),
                           static_cast<CropCode>(reader.as_int(2)), static_cast<CropCode>(reader.as_int(3)),
                           static_cast<CropCode>(reader.as_int(4))});
    }
    try {
        return LabelTaxonomy(std::move(entries));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void save_taxonomy(const LabelTaxonomy& taxonomy, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "crop_code,name,class28,class12,class10\n";
    for (const auto& e : taxonomy.entries()) {
        out << e.code << ',' << e.name << ',' << e.class28 << ',' << e.class12 << ',' << e.class10 << '\n';
    }
}

}  // namespace cropfuse
