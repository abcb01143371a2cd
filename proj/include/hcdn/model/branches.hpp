#pragma once

#include <memory>
#include <vector>

#include "hcdn/model/config.hpp"
#include "hcdn/nn/module.hpp"

namespace hcdn {

template <typename T>
struct StageTokens {
  nn::TensorPtr<T> tokens;  // (h*w, dim)
  int h = 0, w = 0;
};

/// Trainable hierarchical branch (Eq. 2): overlapped patch embedding into
/// transformer blocks with spatial-reduction attention, one feature map per
/// stage at 1/4, 1/8, 1/16 of the input resolution.
template <typename T>
class HierarchicalEncoder : public nn::Module<T> {
 public:
  HierarchicalEncoder(const ModelConfig& cfg, std::mt19937_64& rng) {
    for (int s = 0; s < cfg.stage_count; ++s) {
      const int cin = s == 0 ? 3 : cfg.embed_dims[s - 1];
      const int k = s == 0 ? 7 : 3;
      const int stride = s == 0 ? 4 : 2;
      const int pad = s == 0 ? 3 : 1;
      embeds_.push_back(std::make_unique<nn::PatchEmbed<T>>(cin, cfg.embed_dims[s], k, stride, pad, rng));
      this->child("embed" + std::to_string(s), embeds_.back().get());
      blocks_.emplace_back();
      for (int d = 0; d < cfg.depths[s]; ++d) {
        blocks_.back().push_back(std::make_unique<nn::TransformerBlock<T>>(
            cfg.embed_dims[s], cfg.num_heads[s], cfg.mlp_ratio, cfg.sr_ratios[s], rng));
        this->child("stage" + std::to_string(s) + ".block" + std::to_string(d),
                    blocks_.back().back().get());
      }
      norms_.push_back(std::make_unique<nn::LayerNormM<T>>(cfg.embed_dims[s]));
      this->child("norm" + std::to_string(s), norms_.back().get());
    }
  }

  /// x: (3, H, W) -> one token set per stage.
  std::vector<StageTokens<T>> forward(const nn::TensorPtr<T>& x) const {
    std::vector<StageTokens<T>> out;
    nn::TensorPtr<T> cur = x;
    for (std::size_t s = 0; s < embeds_.size(); ++s) {
      int h = 0, w = 0;
      auto tokens = embeds_[s]->forward(cur, h, w);
      for (const auto& block : blocks_[s]) tokens = block->forward(tokens, h, w);
      tokens = norms_[s]->forward(tokens);
      out.push_back({tokens, h, w});
      cur = nn::tokens_to_chw(tokens, h, w);
    }
    return out;
  }

 private:
  std::vector<std::unique_ptr<nn::PatchEmbed<T>>> embeds_;
  std::vector<std::vector<std::unique_ptr<nn::TransformerBlock<T>>>> blocks_;
  std::vector<std::unique_ptr<nn::LayerNormM<T>>> norms_;
};

/// Pretrained-style plain ViT branch (Eq. 1): non-overlapping patch
/// embedding, learned position embedding (grid-resampled when the runtime
/// grid differs), uniform-resolution blocks. Features are tapped at evenly
/// spaced depths, one per stage. Frozen by default.
template <typename T>
class PretrainedViT : public nn::Module<T> {
 public:
  PretrainedViT(const ModelConfig& cfg, std::mt19937_64& rng)
      : patch_(cfg.vit_patch), grid_(cfg.input_size / cfg.vit_patch),
        trainable_(!cfg.pretrained_branch_frozen),
        embed_(3, cfg.vit_width, cfg.vit_patch, cfg.vit_patch, 0, rng, trainable_) {
    this->child("embed", &embed_);
    pos_embed_ = this->param("pos_embed", {grid_ * grid_, cfg.vit_width}, trainable_);
    nn::init_glorot(pos_embed_, rng, cfg.vit_width, cfg.vit_width);
    for (int d = 0; d < cfg.vit_depth; ++d) {
      blocks_.push_back(std::make_unique<nn::TransformerBlock<T>>(
          cfg.vit_width, cfg.vit_heads, cfg.mlp_ratio, 1, rng, trainable_));
      this->child("block" + std::to_string(d), blocks_.back().get());
    }
    // Tap after block ceil(L*(s+1)/stage_count), 1-indexed.
    const int L = cfg.vit_depth;
    for (int s = 0; s < cfg.stage_count; ++s)
      taps_.push_back((L * (s + 1) + cfg.stage_count - 1) / cfg.stage_count);
  }

  /// x: (3, H, W) -> one token set per stage, all on the ViT patch grid.
  std::vector<StageTokens<T>> forward(const nn::TensorPtr<T>& x) const {
    int h = 0, w = 0;
    auto tokens = embed_.forward(x, h, w);
    nn::TensorPtr<T> pos = pos_embed_;
    if (h != grid_ || w != grid_)
      pos = nn::chw_to_tokens(nn::bilinear_resize(nn::tokens_to_chw(pos, grid_, grid_), h, w));
    tokens = nn::add(tokens, pos);
    std::vector<StageTokens<T>> out;
    std::size_t next_tap = 0;
    for (int d = 0; d < static_cast<int>(blocks_.size()); ++d) {
      tokens = blocks_[d]->forward(tokens, h, w);
      while (next_tap < taps_.size() && taps_[next_tap] == d + 1) {
        out.push_back({tokens, h, w});
        ++next_tap;
      }
    }
    return out;
  }

  bool trainable() const { return trainable_; }

 private:
  int patch_, grid_;
  bool trainable_;
  nn::PatchEmbed<T> embed_;
  nn::TensorPtr<T> pos_embed_;
  std::vector<std::unique_ptr<nn::TransformerBlock<T>>> blocks_;
  std::vector<int> taps_;
};

}  // namespace hcdn
