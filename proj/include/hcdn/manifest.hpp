#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcdn/errors.hpp"
#include "hcdn/image_io.hpp"
#include "hcdn/pair.hpp"

namespace hcdn {

/// One manifest entry; paths are relative to the manifest root.
struct PairRecord {
  std::string pair_id;
  std::string poor_path;
  std::string good_path;
  std::string mask_path;
  TypeTag type_tag = TypeTag::Others;
  SceneTag scene_tag = SceneTag::Outdoor;
};

struct DatasetManifest {
  int version = 1;
  std::filesystem::path root;
  std::vector<PairRecord> records;

  const PairRecord& find(const std::string& pair_id) const {
    for (const auto& r : records)
      if (r.pair_id == pair_id) return r;
    raise(ErrorCode::MissingFile, "pair_id '" + pair_id + "' not in manifest");
  }
};

namespace detail {

inline void validate_manifest(const DatasetManifest& m) {
  std::set<std::string> ids;
  for (const auto& rec : m.records) {
    if (!ids.insert(rec.pair_id).second)
      raise(ErrorCode::ParseError, "duplicate pair_id '" + rec.pair_id + "'");
    for (const auto& rel : {rec.poor_path, rec.good_path, rec.mask_path}) {
      if (!std::filesystem::exists(m.root / rel))
        raise(ErrorCode::MissingFile, (m.root / rel).string());
    }
  }
}

}  // namespace detail

/// Builds a manifest by scanning `<root>/<pair_id>/{poor.png,good.png,mask.png,meta.json}`.
/// Directories missing any of the four files are skipped.
inline DatasetManifest scan_dataset_dir(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    raise(ErrorCode::MissingFile, root.string());
  DatasetManifest m;
  m.root = root;
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(root))
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    PairRecord rec;
    rec.pair_id = id;
    rec.poor_path = id + "/poor.png";
    rec.good_path = id + "/good.png";
    rec.mask_path = id + "/mask.png";
    const auto meta_path = root / id / "meta.json";
    bool complete = std::filesystem::exists(meta_path);
    for (const auto& rel : {rec.poor_path, rec.good_path, rec.mask_path})
      complete = complete && std::filesystem::exists(root / rel);
    if (!complete) continue;
    std::ifstream in(meta_path);
    nlohmann::json meta = nlohmann::json::parse(in, nullptr, false);
    if (meta.is_discarded())
      raise(ErrorCode::ParseError, "invalid JSON in " + meta_path.string());
    rec.type_tag = parse_type_tag(meta.value("type_tag", "Others"));
    rec.scene_tag = parse_scene_tag(meta.value("scene_tag", "Outdoor"));
    m.records.push_back(std::move(rec));
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) raise(ErrorCode::MissingFile, file.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::ParseError, "invalid JSON in " + file.string());
  DatasetManifest m;
  m.version = j.value("version", 1);
  m.root = file.parent_path();
  for (const auto& rj : j.at("records")) {
    PairRecord rec;
    rec.pair_id = rj.at("pair_id").get<std::string>();
    rec.poor_path = rj.at("poor").get<std::string>();
    rec.good_path = rj.at("good").get<std::string>();
    rec.mask_path = rj.at("mask").get<std::string>();
    rec.type_tag = parse_type_tag(rj.value("type_tag", "Others"));
    rec.scene_tag = parse_scene_tag(rj.value("scene_tag", "Outdoor"));
    m.records.push_back(std::move(rec));
  }
  detail::validate_manifest(m);
  return m;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& file) {
  nlohmann::json j;
  j["version"] = m.version;
  j["records"] = nlohmann::json::array();
  for (const auto& rec : m.records) {
    j["records"].push_back({{"pair_id", rec.pair_id},
                            {"poor", rec.poor_path},
                            {"good", rec.good_path},
                            {"mask", rec.mask_path},
                            {"type_tag", type_tag_name(rec.type_tag)},
                            {"scene_tag", scene_tag_name(rec.scene_tag)}});
  }
  std::ofstream out(file);
  if (!out) raise(ErrorCode::IoError, "cannot write " + file.string());
  out << j.dump(2) << "\n";
}

/// Loads and validates one record. The mask must match the poor image's
/// shape (annotations live in poor-image coordinates); the good image may
/// still have its own size until the pair goes through alignment.
inline HousekeepingPair load_pair(const DatasetManifest& m, const PairRecord& rec) {
  HousekeepingPair pair;
  pair.pair_id = rec.pair_id;
  pair.type_tag = rec.type_tag;
  pair.scene_tag = rec.scene_tag;
  pair.poor = load_image(m.root / rec.poor_path);
  pair.good = load_image(m.root / rec.good_path);
  pair.mask = load_mask(m.root / rec.mask_path);
  if (pair.mask.height != pair.poor.height || pair.mask.width != pair.poor.width)
    raise(ErrorCode::DimensionMismatch,
          "pair '" + rec.pair_id + "': mask " + std::to_string(pair.mask.width) + "x" +
              std::to_string(pair.mask.height) + " vs poor image " +
              std::to_string(pair.poor.width) + "x" + std::to_string(pair.poor.height));
  return pair;
}

inline HousekeepingPair load_pair(const DatasetManifest& m, const std::string& pair_id) {
  return load_pair(m, m.find(pair_id));
}

}  // namespace hcdn
