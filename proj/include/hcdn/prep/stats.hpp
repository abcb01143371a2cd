#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "hcdn/errors.hpp"
#include "hcdn/image.hpp"
#include "hcdn/manifest.hpp"

namespace hcdn {

inline double change_area_ratio(const BinaryMask& mask) {
  return static_cast<double>(mask.count_ones()) /
         (static_cast<double>(mask.height) * mask.width);
}

/// Bin index for a ratio under the 10-bin layout [0,10%), ..., [90%,100%].
inline int ratio_bin(double r) {
  return std::min(9, static_cast<int>(std::floor(r * 10.0)));
}

struct StatsReport {
  int total = 0;
  std::map<TypeTag, int> type_counts;
  int indoor = 0;
  int outdoor = 0;
  std::array<int, 10> histogram{};
  std::map<TypeTag, std::array<int, 10>> histogram_by_type;
};

inline StatsReport dataset_stats(const DatasetManifest& m) {
  if (m.records.empty()) raise(ErrorCode::EmptyManifest, "no records to summarize");
  StatsReport report;
  for (const auto& rec : m.records) {
    const BinaryMask mask = load_mask(m.root / rec.mask_path);
    const int bin = ratio_bin(change_area_ratio(mask));
    ++report.total;
    ++report.type_counts[rec.type_tag];
    (rec.scene_tag == SceneTag::Indoor ? report.indoor : report.outdoor) += 1;
    ++report.histogram[static_cast<std::size_t>(bin)];
    ++report.histogram_by_type[rec.type_tag][static_cast<std::size_t>(bin)];
  }
  return report;
}

inline void save_stats(const StatsReport& report, const std::filesystem::path& file) {
  nlohmann::json j;
  j["total"] = report.total;
  j["indoor"] = report.indoor;
  j["outdoor"] = report.outdoor;
  for (const auto& [tag, count] : report.type_counts)
    j["type_counts"][type_tag_name(tag)] = count;
  j["change_ratio_histogram"] = report.histogram;
  for (const auto& [tag, hist] : report.histogram_by_type)
    j["change_ratio_histogram_by_type"][type_tag_name(tag)] = hist;
  std::ofstream out(file);
  if (!out) raise(ErrorCode::IoError, "cannot write " + file.string());
  out << j.dump(2) << "\n";
}

}  // namespace hcdn
