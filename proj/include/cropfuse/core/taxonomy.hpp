#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cropfuse {

using CropCode = std::int32_t;

/// Aggregation level used for labels and evaluation.
enum class Level { Fine, C28, C12, C10 };

Level parse_level(std::string_view name);
std::string_view level_name(Level level);

/// Result of aggregate_label for codes dropped from the 10-class setting.
inline constexpr CropCode kExcluded = -1;

/// Fine crop codes and their expert aggregations. The c12 map must be a
/// coarsening of c28, and c10 drops whole c12 groups (grassland, other).
class LabelTaxonomy {
public:
    struct Entry {
        CropCode code;
        std::string name;
        CropCode class28;
        CropCode class12;
        CropCode class10;  // kExcluded when dropped
    };

    LabelTaxonomy() = default;
    /// Validates codes 0..V-1 are all present and the maps are consistent.
    explicit LabelTaxonomy(std::vector<Entry> entries);

    /// Fine class count V.
    int size() const { return static_cast<int>(entries_.size()); }
    int num_classes(Level level) const;

    CropCode aggregate(CropCode code, Level level) const;
    const Entry& entry(CropCode code) const;
    const std::vector<Entry>& entries() const { return entries_; }

    /// c12 groups whose codes are excluded at c10.
    const std::vector<CropCode>& excluded_c12_groups() const { return excluded12_; }

private:
    std::vector<Entry> entries_;
    int n28_ = 0;
    int n12_ = 0;
    int n10_ = 0;
    std::vector<CropCode> excluded12_;
};

/// Reads `crop_code,name,class28,class12,class10`.
LabelTaxonomy load_taxonomy(const std::string& path);
void save_taxonomy(const LabelTaxonomy& taxonomy, const std::string& path);

}  // namespace cropfuse
