#pragma once

#include <memory>
#include <vector>

#include "hcdn/model/branches.hpp"
#include "hcdn/nn/module.hpp"

namespace hcdn {

/// Change head + decoder (Eq. 4): per stage the bi-temporal pair is combined
/// as concat(|f_p - f_g|, f_p, f_g) and projected to the decoder width; all
/// stages are upsampled to the stage-0 grid, concatenated, fused, run through
/// one lightweight transformer block, reduced to one logit channel, and
/// bilinearly upsampled to the input resolution. Concatenating f_p before
/// f_g makes the head order-sensitive, so change stays directional.
template <typename T>
class ChangeHead : public nn::Module<T> {
 public:
  ChangeHead(const ModelConfig& cfg, std::mt19937_64& rng)
      : fuse_(cfg.decoder_dim * cfg.stage_count, cfg.decoder_dim, rng),
        block_(cfg.decoder_dim, cfg.num_heads[0], cfg.mlp_ratio, cfg.sr_ratios[0], rng),
        out_(cfg.decoder_dim, 1, rng) {
    for (int s = 0; s < cfg.stage_count; ++s) {
      stage_proj_.push_back(
          std::make_unique<nn::Linear<T>>(3 * cfg.embed_dims[s], cfg.decoder_dim, rng));
      this->child("proj" + std::to_string(s), stage_proj_.back().get());
    }
    this->child("fuse", &fuse_);
    this->child("block", &block_);
    this->child("out", &out_);
  }

  /// fused_poor/fused_good: per-stage token grids; returns (1, out_h, out_w).
  nn::TensorPtr<T> forward(const std::vector<StageTokens<T>>& fused_poor,
                           const std::vector<StageTokens<T>>& fused_good,
                           int out_h, int out_w) const {
    using namespace nn;
    const int h0 = fused_poor[0].h, w0 = fused_poor[0].w;
    TensorPtr<T> merged;
    for (std::size_t s = 0; s < stage_proj_.size(); ++s) {
      const auto& p = fused_poor[s].tokens;
      const auto& g = fused_good[s].tokens;
      auto combined = concat_cols(concat_cols(abs_op(sub(p, g)), p), g);
      auto proj = stage_proj_[s]->forward(combined);
      if (fused_poor[s].h != h0 || fused_poor[s].w != w0)
        proj = chw_to_tokens(
            bilinear_resize(tokens_to_chw(proj, fused_poor[s].h, fused_poor[s].w), h0, w0));
      merged = s == 0 ? proj : concat_cols(merged, proj);
    }
    auto x = fuse_.forward(merged);
    x = block_.forward(x, h0, w0);
    auto logits = tokens_to_chw(out_.forward(x), h0, w0);
    return bilinear_resize(logits, out_h, out_w);
  }

 private:
  std::vector<std::unique_ptr<nn::Linear<T>>> stage_proj_;
  nn::Linear<T> fuse_;
  nn::TransformerBlock<T> block_;
  nn::Linear<T> out_;
};

}  // namespace hcdn
