#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hcdn/manifest.hpp"
#include "hcdn/prep/gate.hpp"

namespace hcdn {

struct PrepSummary {
  int total = 0;
  int accepted = 0;
  std::map<RejectReason, int> rejected_by_reason;
  DatasetManifest accepted_manifest;
};

namespace detail {

inline std::string format_ratio(double r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << r;
  return os.str();
}

inline nlohmann::json gate_report_json(const std::string& pair_id, const GateReport& report) {
  nlohmann::json j;
  j["pair_id"] = pair_id;
  j["verdict"] = verdict_name(report.verdict);
  j["reason"] = reject_reason_name(report.reason);
  j["match_count"] = report.match_count;
  j["blank_ratio"] = report.blank_ratio;
  if (report.has_transform) {
    j["transform"] = {{"theta", report.transform.theta},
                      {"tx", report.transform.tx},
                      {"ty", report.transform.ty}};
  }
  return j;
}

}  // namespace detail

/// Batch gate over a manifest. Writes, under `out_dir`:
///   <pair_id>/gate_report.json           for every pair
///   <pair_id>/{poor,good,mask}.png + meta.json   for accepted pairs (good = aligned)
///   summary.csv                          one row per pair, manifest order
///   manifest.json                        accepted pairs only
inline PrepSummary run_prep(const DatasetManifest& manifest, const std::filesystem::path& out_dir,
                            const GateParams& params = {}) {
  if (manifest.records.empty()) raise(ErrorCode::EmptyManifest, "nothing to prepare");
  std::filesystem::create_directories(out_dir);

  PrepSummary summary;
  summary.accepted_manifest.root = out_dir;

  std::ofstream csv(out_dir / "summary.csv");
  if (!csv) raise(ErrorCode::IoError, "cannot write " + (out_dir / "summary.csv").string());
  csv << "pair_id,verdict,reason,match_count,blank_ratio\n";

  for (const auto& rec : manifest.records) {
    HousekeepingPair pair = load_pair(manifest, rec);
    const GateReport report = gate_pair(pair, params);
    ++summary.total;

    const auto pair_dir = out_dir / rec.pair_id;
    std::filesystem::create_directories(pair_dir);
    {
      std::ofstream out(pair_dir / "gate_report.json");
      if (!out) raise(ErrorCode::IoError, "cannot write gate_report.json for " + rec.pair_id);
      out << detail::gate_report_json(rec.pair_id, report).dump(2) << "\n";
    }
    csv << rec.pair_id << ',' << verdict_name(report.verdict) << ','
        << reject_reason_name(report.reason) << ',' << report.match_count << ','
        << detail::format_ratio(report.blank_ratio) << "\n";

    if (report.verdict == Verdict::GoodMatch) {
      ++summary.accepted;
      save_image(pair.poor, pair_dir / "poor.png");
      save_image(pair.good, pair_dir / "good.png");
      save_mask(pair.mask, pair_dir / "mask.png");
      {
        nlohmann::json meta = {{"type_tag", type_tag_name(rec.type_tag)},
                               {"scene_tag", scene_tag_name(rec.scene_tag)}};
        std::ofstream out(pair_dir / "meta.json");
        out << meta.dump(2) << "\n";
      }
      PairRecord out_rec = rec;
      out_rec.poor_path = rec.pair_id + "/poor.png";
      out_rec.good_path = rec.pair_id + "/good.png";
      out_rec.mask_path = rec.pair_id + "/mask.png";
      summary.accepted_manifest.records.push_back(std::move(out_rec));
    } else {
      ++summary.rejected_by_reason[report.reason];
    }
  }

  save_manifest(summary.accepted_manifest, out_dir / "manifest.json");
  return summary;
}

}  // namespace hcdn
