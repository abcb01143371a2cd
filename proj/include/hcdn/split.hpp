#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcdn/errors.hpp"
#include "hcdn/manifest.hpp"
#include "hcdn/rng.hpp"

namespace hcdn {

struct SplitRatios {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;
};

struct SplitAssignment {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

namespace detail {

inline void check_ratios(const SplitRatios& r) {
  if (r.train < 0.0 || r.val < 0.0 || r.test < 0.0)
    raise(ErrorCode::BadRatios, "split ratios must be non-negative");
  const double sum = r.train + r.val + r.test;
  if (std::abs(sum - 1.0) > 1e-9)
    raise(ErrorCode::BadRatios, "split ratios sum to " + std::to_string(sum) + ", expected 1");
}

// Floor-based bucket sizes with the remainder going to train first, then val.
inline void bucket_sizes(std::size_t n, const SplitRatios& r, std::size_t& n_train,
                         std::size_t& n_val, std::size_t& n_test) {
  n_train = static_cast<std::size_t>(std::floor(r.train * static_cast<double>(n)));
  n_val = static_cast<std::size_t>(std::floor(r.val * static_cast<double>(n)));
  n_test = static_cast<std::size_t>(std::floor(r.test * static_cast<double>(n)));
  std::size_t rem = n - (n_train + n_val + n_test);
  if (rem > 0) {
    const std::size_t extra_train = (rem + 1) / 2;
    n_train += extra_train;
    n_val += rem - extra_train;
  }
}

inline void assign_ids(std::vector<std::string> ids, std::uint64_t seed, const SplitRatios& r,
                       SplitAssignment& out) {
  std::mt19937_64 rng(seed);
  rng_shuffle(rng, ids);
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  bucket_sizes(ids.size(), r, n_train, n_val, n_test);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i < n_train)
      out.train.push_back(ids[i]);
    else if (i < n_train + n_val)
      out.val.push_back(ids[i]);
    else
      out.test.push_back(ids[i]);
  }
}

}  // namespace detail

/// Deterministic shuffled split. With `stratified` the shuffle and bucket
/// arithmetic run per type_tag so every class lands in train at its overall
/// ratio (small classes may leave val/test empty).
inline SplitAssignment split_dataset(const DatasetManifest& m, std::uint64_t seed,
                                     const SplitRatios& ratios = {}, bool stratified = false) {
  detail::check_ratios(ratios);
  if (m.records.empty()) raise(ErrorCode::EmptyManifest, "cannot split an empty manifest");
  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  if (!stratified) {
    std::vector<std::string> ids;
    ids.reserve(m.records.size());
    for (const auto& rec : m.records) ids.push_back(rec.pair_id);
    detail::assign_ids(std::move(ids), seed, ratios, out);
  } else {
    std::map<TypeTag, std::vector<std::string>> by_tag;
    for (const auto& rec : m.records) by_tag[rec.type_tag].push_back(rec.pair_id);
    for (auto& [tag, ids] : by_tag) {
      const auto sub_seed = rng_derive(seed, static_cast<std::uint64_t>(tag));
      detail::assign_ids(std::move(ids), sub_seed, ratios, out);
    }
  }
  return out;
}

inline void save_split(const SplitAssignment& s, const std::filesystem::path& file) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["ratios"] = {s.ratios.train, s.ratios.val, s.ratios.test};
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  std::ofstream out(file);
  if (!out) raise(ErrorCode::IoError, "cannot write " + file.string());
  out << j.dump(2) << "\n";
}

inline SplitAssignment load_split(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) raise(ErrorCode::MissingFile, file.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::ParseError, "invalid JSON in " + file.string());
  SplitAssignment s;
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto& r = j.at("ratios");
  s.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
  s.train = j.at("train").get<std::vector<std::string>>();
  s.val = j.at("val").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  return s;
}

/// Subset of manifest records named by a split bucket, in bucket order.
inline std::vector<PairRecord> select_records(const DatasetManifest& m,
                                              const std::vector<std::string>& ids) {
  if (ids.empty()) raise(ErrorCode::EmptySplit, "selected split bucket is empty");
  std::vector<PairRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(m.find(id));
  return out;
}

}  // namespace hcdn
