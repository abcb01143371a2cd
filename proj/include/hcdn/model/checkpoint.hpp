#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hcdn/model/hcdn.hpp"

namespace hcdn {

struct TensorBlob {
  std::vector<int> shape;
  std::vector<double> values;
};

using TensorMap = std::map<std::string, TensorBlob>;

namespace detail {

template <typename V>
void write_pod(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) raise(ErrorCode::ParseError, "tensor archive: truncated file");
  return v;
}

inline constexpr char kArchiveMagic[8] = {'H', 'C', 'D', 'N', 'A', 'R', 'C', 'H'};
inline constexpr std::uint32_t kArchiveVersion = 1;

}  // namespace detail

/// Versioned little-endian container: magic, version, JSON header, then
/// named float64 tensors in write order.
inline void save_tensor_archive(const std::filesystem::path& path, const nlohmann::json& header,
                                const std::vector<std::pair<std::string, TensorBlob>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(detail::kArchiveMagic, sizeof(detail::kArchiveMagic));
  detail::write_pod<std::uint32_t>(out, detail::kArchiveVersion);
  const std::string header_bytes = header.dump();
  detail::write_pod<std::uint64_t>(out, header_bytes.size());
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  detail::write_pod<std::uint64_t>(out, tensors.size());
  for (const auto& [name, blob] : tensors) {
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(blob.shape.size()));
    for (int d : blob.shape) detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    detail::write_pod<std::uint64_t>(out, blob.values.size());
    out.write(reinterpret_cast<const char*>(blob.values.data()),
              static_cast<std::streamsize>(blob.values.size() * sizeof(double)));
  }
  if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
}

inline std::pair<nlohmann::json, TensorMap> load_tensor_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::MissingFile, "tensor archive not found: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kArchiveMagic, sizeof(magic)) != 0)
    raise(ErrorCode::ParseError, "tensor archive: bad magic in " + path.string());
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != detail::kArchiveVersion)
    raise(ErrorCode::ParseError, "tensor archive: unsupported version");
  const auto header_len = detail::read_pod<std::uint64_t>(in);
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) raise(ErrorCode::ParseError, "tensor archive: truncated header");
  nlohmann::json header = nlohmann::json::parse(header_bytes, nullptr, false);
  if (header.is_discarded()) raise(ErrorCode::ParseError, "tensor archive: invalid header JSON");
  const auto count = detail::read_pod<std::uint64_t>(in);
  TensorMap tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) raise(ErrorCode::ParseError, "tensor archive: truncated tensor name");
    TensorBlob blob;
    const auto rank = detail::read_pod<std::uint32_t>(in);
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      blob.shape.push_back(static_cast<int>(detail::read_pod<std::uint32_t>(in)));
      numel *= static_cast<std::uint64_t>(blob.shape.back());
    }
    const auto value_count = detail::read_pod<std::uint64_t>(in);
    if (value_count != numel) raise(ErrorCode::ParseError, "tensor archive: size mismatch");
    blob.values.resize(value_count);
    in.read(reinterpret_cast<char*>(blob.values.data()),
            static_cast<std::streamsize>(value_count * sizeof(double)));
    if (!in) raise(ErrorCode::ParseError, "tensor archive: truncated tensor data");
    if (!tensors.emplace(std::move(name), std::move(blob)).second)
      raise(ErrorCode::ParseError, "tensor archive: duplicate tensor name");
  }
  return {header, tensors};
}

template <typename T>
std::vector<std::pair<std::string, TensorBlob>> snapshot_parameters(const nn::Module<T>& m) {
  std::vector<std::pair<std::string, TensorBlob>> out;
  for (const auto& [name, p] : m.named_parameters()) {
    TensorBlob blob;
    blob.shape = p->shape;
    blob.values.assign(p->value.begin(), p->value.end());
    out.emplace_back(name, std::move(blob));
  }
  return out;
}

template <typename T>
void apply_parameters(nn::Module<T>& m, const TensorMap& tensors, const std::string& what) {
  const auto params = m.named_parameters();
  if (params.size() != tensors.size())
    raise(ErrorCode::ConfigMismatch, what + ": parameter count mismatch");
  for (const auto& [name, p] : params) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) raise(ErrorCode::ConfigMismatch, what + ": missing tensor " + name);
    if (it->second.shape != p->shape)
      raise(ErrorCode::ConfigMismatch, what + ": shape mismatch for " + name);
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value[i] = static_cast<T>(it->second.values[i]);
  }
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const HcdnModel<T>& model) {
  nlohmann::json header;
  header["kind"] = "hcdn_checkpoint";
  header["model_config"] = model_config_to_json(model.config);
  save_tensor_archive(path, header, snapshot_parameters(model));
}

inline ModelConfig peek_checkpoint_config(const std::filesystem::path& path) {
  auto [header, tensors] = load_tensor_archive(path);
  if (header.value("kind", std::string()) != "hcdn_checkpoint")
    raise(ErrorCode::ParseError, "not a checkpoint file: " + path.string());
  return model_config_from_json(header.at("model_config"));
}

/// Loads weights into an existing model; the stored config must equal the
/// model's config exactly.
template <typename T>
void load_checkpoint(const std::filesystem::path& path, HcdnModel<T>& model) {
  auto [header, tensors] = load_tensor_archive(path);
  if (header.value("kind", std::string()) != "hcdn_checkpoint")
    raise(ErrorCode::ParseError, "not a checkpoint file: " + path.string());
  const ModelConfig stored = model_config_from_json(header.at("model_config"));
  if (!(stored == model.config))
    raise(ErrorCode::ConfigMismatch, "checkpoint config does not match model config");
  apply_parameters(model, tensors, "checkpoint");
}

template <typename T>
void save_pretrained_weights(const std::filesystem::path& path, const HcdnModel<T>& model) {
  nlohmann::json header;
  header["kind"] = "vit_weights";
  save_tensor_archive(path, header, snapshot_parameters(*model.pretrained_branch));
}

/// Builds a model from config; when `pretrained_weights` names a file, the
/// pretrained branch is loaded from it, otherwise it keeps its seeded random
/// initialization.
template <typename T>
std::unique_ptr<HcdnModel<T>> create_model(const ModelConfig& cfg) {
  auto model = std::make_unique<HcdnModel<T>>(cfg);
  if (!cfg.pretrained_weights.empty()) {
    auto [header, tensors] = load_tensor_archive(cfg.pretrained_weights);
    if (header.value("kind", std::string()) != "vit_weights")
      raise(ErrorCode::ParseError, "not a pretrained-weights file: " + cfg.pretrained_weights);
    apply_parameters(*model->pretrained_branch, tensors, "pretrained weights");
  }
  return model;
}

}  // namespace hcdn
