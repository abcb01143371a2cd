#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcdn/errors.hpp"

namespace hcdn {

/// Architecture hyperparameters. The reference network runs three stages;
/// smaller toy configurations are permitted for tests, so validate() bounds
/// stage_count instead of pinning it.
struct ModelConfig {
  int input_size = 256;
  int stage_count = 3;
  std::vector<int> embed_dims{32, 64, 128};
  std::vector<int> num_heads{1, 2, 4};
  std::vector<int> depths{2, 2, 2};
  std::vector<int> sr_ratios{4, 2, 1};
  int mlp_ratio = 4;
  int decoder_dim = 64;
  int vit_width = 64;
  int vit_depth = 4;
  int vit_heads = 4;
  int vit_patch = 16;
  bool pretrained_branch_frozen = true;
  std::string pretrained_weights;  // empty -> seeded random init
  std::string hv_mode = "attention";  // Eq. 9 h_v := A; alternate "hk" -> h_v := h_k
  std::uint64_t init_seed = 1234;

  int d_head(int stage) const { return embed_dims[stage] / num_heads[stage]; }

  /// Downsampling factor of stage s relative to the input: 4, 8, 16, ...
  int stage_stride(int stage) const { return 4 << stage; }

  void validate() const {
    auto fail = [](const std::string& msg) { raise(ErrorCode::ConfigMismatch, "ModelConfig: " + msg); };
    if (stage_count < 1 || stage_count > 4) fail("stage_count must be in [1,4]");
    const auto n = static_cast<std::size_t>(stage_count);
    if (embed_dims.size() != n || num_heads.size() != n || depths.size() != n ||
        sr_ratios.size() != n)
      fail("per-stage lists must have stage_count entries");
    for (int s = 0; s < stage_count; ++s) {
      if (embed_dims[s] <= 0 || num_heads[s] <= 0 || depths[s] < 0 || sr_ratios[s] < 1)
        fail("per-stage values must be positive");
      if (embed_dims[s] % num_heads[s] != 0) fail("embed_dim not divisible by num_heads");
    }
    if (input_size <= 0 || input_size % (stage_stride(stage_count - 1)) != 0)
      fail("input_size must be a positive multiple of the last stage stride");
    if (vit_patch <= 0 || input_size % vit_patch != 0)
      fail("input_size must be a multiple of vit_patch");
    if (vit_width <= 0 || vit_depth < 1 || vit_heads <= 0 || vit_width % vit_heads != 0)
      fail("invalid pretrained-branch geometry");
    if (mlp_ratio < 1 || decoder_dim <= 0 || decoder_dim % num_heads[0] != 0)
      fail("invalid decoder geometry");
    if (hv_mode != "attention" && hv_mode != "hk") fail("hv_mode must be 'attention' or 'hk'");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["input_size"] = c.input_size;
  j["stage_count"] = c.stage_count;
  j["embed_dims"] = c.embed_dims;
  j["num_heads"] = c.num_heads;
  j["depths"] = c.depths;
  j["sr_ratios"] = c.sr_ratios;
  j["mlp_ratio"] = c.mlp_ratio;
  j["decoder_dim"] = c.decoder_dim;
  j["vit_width"] = c.vit_width;
  j["vit_depth"] = c.vit_depth;
  j["vit_heads"] = c.vit_heads;
  j["vit_patch"] = c.vit_patch;
  j["pretrained_branch_frozen"] = c.pretrained_branch_frozen;
  j["pretrained_weights"] = c.pretrained_weights;
  j["hv_mode"] = c.hv_mode;
  j["init_seed"] = c.init_seed;
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) raise(ErrorCode::ParseError, "model config: expected JSON object");
  ModelConfig c;
  try {
    c.input_size = j.at("input_size").get<int>();
    c.stage_count = j.at("stage_count").get<int>();
    c.embed_dims = j.at("embed_dims").get<std::vector<int>>();
    c.num_heads = j.at("num_heads").get<std::vector<int>>();
    c.depths = j.at("depths").get<std::vector<int>>();
    c.sr_ratios = j.at("sr_ratios").get<std::vector<int>>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.decoder_dim = j.at("decoder_dim").get<int>();
    c.vit_width = j.at("vit_width").get<int>();
    c.vit_depth = j.at("vit_depth").get<int>();
    c.vit_heads = j.at("vit_heads").get<int>();
    c.vit_patch = j.at("vit_patch").get<int>();
    c.pretrained_branch_frozen = j.at("pretrained_branch_frozen").get<bool>();
    c.pretrained_weights = j.at("pretrained_weights").get<std::string>();
    c.hv_mode = j.at("hv_mode").get<std::string>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ParseError, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace hcdn
