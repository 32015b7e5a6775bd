#include "cropfuse/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "cropfuse/util/csv.hpp"
#include "cropfuse/util/errors.hpp"

namespace cropfuse {

std::size_t Dataset::add_parcel(ParcelRecord parcel) {
    if (parcel.parcel_id.empty()) throw DataError("empty parcel id");
    if (!(parcel.area_ha > 0.0) || !std::isfinite(parcel.area_ha)) {
        throw DataError("parcel " + parcel.parcel_id + ": area must be > 0");
    }
    if (!std::isfinite(parcel.centroid_x) || !std::isfinite(parcel.centroid_y)) {
        throw DataError("parcel " + parcel.parcel_id + ": non-finite centroid");
    }
    const auto idx = parcels_.size();
    if (!index_.emplace(parcel.parcel_id, idx).second) {
        throw DataError("duplicate parcel id " + parcel.parcel_id);
    }
    parcels_.push_back(std::move(parcel));
    crops_.emplace_back();
    samples_.emplace_back();
    return idx;
}

void Dataset::add_crop(const CropRecord& record) {
    const auto idx = find(record.parcel_id);
    if (!idx) throw DataError("unknown parcel_id " + record.parcel_id);
    if (record.crop_code < 0 || record.crop_code >= num_classes_) throw DataError("crop code out of range");
    if (!crops_[*idx].emplace(record.season_year, record.crop_code).second) {
        throw DataError("duplicate crop record for " + record.parcel_id + " in " + std::to_string(record.season_year));
    }
}

void Dataset::add_sample(std::size_t parcel, const RsSample& sample) { samples_.at(parcel).push_back(sample); }

void Dataset::finalize() {
    for (auto& s : samples_) {
        std::stable_sort(s.begin(), s.end(), [](const RsSample& a, const RsSample& b) { return a.date < b.date; });
    }
}

std::optional<std::size_t> Dataset::find(const std::string& parcel_id) const {
    const auto it = index_.find(parcel_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<CropCode> Dataset::crop_at(std::size_t parcel, int season_year) const {
    const auto& m = crops_.at(parcel);
    const auto it = m.find(season_year);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

std::vector<std::optional<CropCode>> Dataset::crops_in(int season_year) const {
    std::vector<std::optional<CropCode>> out(parcels_.size());
    for (std::size_t i = 0; i < parcels_.size(); ++i) out[i] = crop_at(i, season_year);
    return out;
}

std::vector<int> Dataset::rs_seasons(std::size_t parcel) const {
    std::set<int> seasons;
    for (const auto& s : samples_.at(parcel)) seasons.insert(season_of(s.date));
    return {seasons.begin(), seasons.end()};
}

Dataset load_dataset(const std::string& parcels_path, const std::string& crops_path, const std::string& rs_path,
                     const LabelTaxonomy& taxonomy) {
    Dataset ds(taxonomy.size());
    {
        csv::Reader r(parcels_path, "parcel_id,centroid_x_m,centroid_y_m,area_ha");
        while (r.next()) {
            ParcelRecord p{r.field(0), r.as_double(1), r.as_double(2), r.as_double(3)};
            if (!(p.area_ha > 0.0)) r.fail(3, "area_ha must be > 0");
            if (ds.find(p.parcel_id)) r.fail(0, "duplicate parcel_id " + p.parcel_id);
            ds.add_parcel(std::move(p));
        }
    }
    {
        csv::Reader r(crops_path, "parcel_id,season_year,crop_code");
        while (r.next()) {
            const auto idx = ds.find(r.field(0));
            if (!idx) r.fail(0, "unknown parcel_id " + r.field(0));
            const auto year = r.as_int(1);
            const auto code = r.as_int(2);
            if (code < 0 || code >= taxonomy.size()) r.fail(2, "crop code out of range");
            if (ds.crop_at(*idx, static_cast<int>(year))) {
                r.fail("duplicate crop record for (" + r.field(0) + ", " + std::to_string(year) + ")");
            }
            ds.add_crop({r.field(0), static_cast<int>(year), static_cast<CropCode>(code)});
        }
    }
    if (!rs_path.empty()) {
        csv::Reader r(rs_path, "parcel_id,date,b4,b8a,lai,fapar");
        while (r.next()) {
            const auto idx = ds.find(r.field(0));
            if (!idx) r.fail(0, "unknown parcel_id " + r.field(0));
            RsSample s;
            try {
                s.date = parse_date(r.field(1));
            } catch (const DataError& e) {
                r.fail(1, e.what());
            }
            for (std::size_t k = 0; k < kNumSignals; ++k) s.values[k] = r.as_double_or_missing(2 + k);
            ds.add_sample(*idx, s);
        }
    }
    ds.finalize();
    return ds;
}

namespace {
void write_number(std::ostream& out, double v) {
    if (std::isnan(v)) return;  // empty cell
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    out << buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    return out;
}
}  // namespace

void save_parcels(const Dataset& dataset, const std::string& path) {
    auto out = open_out(path);
    out << "parcel_id,centroid_x_m,centroid_y_m,area_ha\n";
    char buf[128];
    for (const auto& p : dataset.parcels()) {
        std::snprintf(buf, sizeof(buf), "%.1f,%.1f,%.4f", p.centroid_x, p.centroid_y, p.area_ha);
        out << p.parcel_id << ',' << buf << '\n';
    }
}

void save_crops(const Dataset& dataset, const std::string& path) {
    auto out = open_out(path);
    out << "parcel_id,season_year,crop_code\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (const auto& [year, code] : dataset.crops_of(i)) {
            out << dataset.parcel(i).parcel_id << ',' << year << ',' << code << '\n';
        }
    }
}

void save_rs(const Dataset& dataset, const std::string& path) {
    auto out = open_out(path);
    out << "parcel_id,date,b4,b8a,lai,fapar\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (const auto& s : dataset.samples_of(i)) {
            out << dataset.parcel(i).parcel_id << ',' << format_date(s.date);
            for (double v : s.values) {
                out << ',';
                write_number(out, v);
            }
            out << '\n';
        }
    }
}

}  // namespace cropfuse
