#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cropfuse/core/dates.hpp"
#include "cropfuse/core/taxonomy.hpp"

namespace cropfuse {

struct ParcelRecord {
    std::string parcel_id;
    double centroid_x = 0.0;  // projected metres
    double centroid_y = 0.0;
    double area_ha = 0.0;
};

struct CropRecord {
    std::string parcel_id;
    int season_year = 0;
    CropCode crop_code = 0;
};

enum Signal : std::size_t { kB4 = 0, kB8A = 1, kLAI = 2, kFAPAR = 3 };
inline constexpr std::size_t kNumSignals = 4;
inline constexpr std::array<const char*, kNumSignals> kSignalNames{"b4", "b8a", "lai", "fapar"};

/// One parcel-level observation; missing values are NaN.
struct RsSample {
    Date date;
    std::array<double, kNumSignals> values{};
};

/// Parcels, crop labels and remote-sensing samples indexed by parcel.
/// Immutable once loaded.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(int num_classes) : num_classes_(num_classes) {}

    /// Throws DataError on duplicate ids or invalid area/coordinates.
    std::size_t add_parcel(ParcelRecord parcel);
    /// Throws DataError on unknown parcel, duplicate (parcel, year) or code >= V.
    void add_crop(const CropRecord& record);
    void add_sample(std::size_t parcel, const RsSample& sample);
    /// Sorts samples by date; call once after loading.
    void finalize();

    int num_classes() const { return num_classes_; }
    std::size_t size() const { return parcels_.size(); }
    const ParcelRecord& parcel(std::size_t i) const { return parcels_.at(i); }
    const std::vector<ParcelRecord>& parcels() const { return parcels_; }
    std::optional<std::size_t> find(const std::string& parcel_id) const;

    std::optional<CropCode> crop_at(std::size_t parcel, int season_year) const;
    const std::map<int, CropCode>& crops_of(std::size_t parcel) const { return crops_.at(parcel); }
    /// Every parcel's label in one season (nullopt when unlabeled).
    std::vector<std::optional<CropCode>> crops_in(int season_year) const;

    const std::vector<RsSample>& samples_of(std::size_t parcel) const { return samples_.at(parcel); }
    /// Seasons holding at least one RS sample for the parcel, ascending.
    std::vector<int> rs_seasons(std::size_t parcel) const;

private:
    int num_classes_ = 0;
    std::vector<ParcelRecord> parcels_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::map<int, CropCode>> crops_;
    std::vector<std::vector<RsSample>> samples_;
};

/// Loads the three CSV files (see README for schemas). `rs_path` may be
/// empty to load labels only.
Dataset load_dataset(const std::string& parcels_path, const std::string& crops_path, const std::string& rs_path,
                     const LabelTaxonomy& taxonomy);

void save_parcels(const Dataset& dataset, const std::string& path);
void save_crops(const Dataset& dataset, const std::string& path);
void save_rs(const Dataset& dataset, const std::string& path);

}  // namespace cropfuse
