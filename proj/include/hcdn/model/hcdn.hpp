#pragma once

#include <memory>
#include <vector>

#include "hcdn/augment/policy.hpp"
#include "hcdn/image.hpp"
#include "hcdn/model/branches.hpp"
#include "hcdn/model/config.hpp"
#include "hcdn/model/ffm.hpp"
#include "hcdn/model/head.hpp"

namespace hcdn {

struct LogitMask {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // pre-sigmoid change scores, row-major

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// prob_threshold on sigmoid(logit); 0.5 corresponds to logit > 0.
inline BinaryMask threshold_mask(const LogitMask& logits, double prob_threshold = 0.5) {
  BinaryMask mask(logits.height, logits.width);
  const double logit_cut = std::log(prob_threshold / (1.0 - prob_threshold));
  for (std::size_t i = 0; i < logits.values.size(); ++i)
    mask.values[i] = logits.values[i] > logit_cut ? 1 : 0;
  return mask;
}

struct NormalizedPair {
  FloatImage poor;
  FloatImage good;
};

inline FloatImage blackout_image(int height, int width,
                                 const NormalizationConstants& c = {}) {
  FloatImage img(3, height, width);
  for (int ch = 0; ch < 3; ++ch) {
    const float v = static_cast<float>((0.0 - c.mean[ch]) / c.stddev[ch]);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) img.at(ch, y, x) = v;
  }
  return img;
}

/// Segmentation-mode probe: the good image becomes a black frame
/// (normalized), the poor image is untouched. Idempotent.
inline void blackout_good(NormalizedPair& pair, const NormalizationConstants& c = {}) {
  pair.good = blackout_image(pair.good.height, pair.good.width, c);
}

/// Mirror probe: blacks out the poor image instead.
inline void blackout_poor(NormalizedPair& pair, const NormalizationConstants& c = {}) {
  pair.poor = blackout_image(pair.poor.height, pair.poor.width, c);
}

template <typename T>
nn::TensorPtr<T> image_to_tensor(const FloatImage& img) {
  std::vector<T> values(img.data.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(img.data[i]);
  return nn::make_const<T>({img.channels, img.height, img.width}, values);
}

/// The full network: Siamese dual-branch encoding (Eqs. 1-2), per-image
/// per-stage feature fusion (Eq. 3), change head + decoder (Eq. 4). One
/// instance holds one set of branch weights; both images pass through the
/// same parameter objects.
template <typename T>
class HcdnModel : public nn::Module<T> {
 public:
  explicit HcdnModel(ModelConfig cfg) : config(std::move(cfg)) {
    config.validate();
    std::mt19937_64 rng(config.init_seed);
    trainable_branch = std::make_unique<HierarchicalEncoder<T>>(config, rng);
    this->child("trainable", trainable_branch.get());
    pretrained_branch = std::make_unique<PretrainedViT<T>>(config, rng);
    this->child("pretrained", pretrained_branch.get());
    for (int s = 0; s < config.stage_count; ++s) {
      adapters.push_back(
          std::make_unique<nn::Linear<T>>(config.vit_width, config.embed_dims[s], rng));
      this->child("adapt" + std::to_string(s), adapters.back().get());
      ffms.push_back(std::make_unique<FeatureFusion<T>>(
          config.embed_dims[s], config.num_heads[s], config.hv_mode == "attention", rng));
      this->child("ffm" + std::to_string(s), ffms.back().get());
    }
    head = std::make_unique<ChangeHead<T>>(config, rng);
    this->child("head", head.get());
  }

  /// Eqs. 1-3 for one image: h_c from the pretrained branch (resampled to the
  /// stage grid and linearly projected), h_f from the trainable branch, fused
  /// per stage by the FFM.
  std::vector<StageTokens<T>> encode(const nn::TensorPtr<T>& x) const {
    using namespace nn;
    const auto h_f = trainable_branch->forward(x);
    const auto taps = pretrained_branch->forward(x);
    std::vector<StageTokens<T>> fused;
    for (std::size_t s = 0; s < h_f.size(); ++s) {
      auto grid = tokens_to_chw(taps[s].tokens, taps[s].h, taps[s].w);
      auto resampled = chw_to_tokens(bilinear_resize(grid, h_f[s].h, h_f[s].w));
      auto h_c = adapters[s]->forward(resampled);
      fused.push_back({ffms[s]->fuse(h_c, h_f[s].tokens, h_f[s].h, h_f[s].w).h_t,
                       h_f[s].h, h_f[s].w});
    }
    return fused;
  }

  /// Full forward to pre-sigmoid logits, shape (1, H, W).
  nn::TensorPtr<T> forward_logits(const FloatImage& poor, const FloatImage& good) const {
    check_input(poor);
    if (good.channels != poor.channels || good.height != poor.height || good.width != poor.width)
      raise(ErrorCode::ShapeMismatch, "forward: poor/good shapes differ");
    const auto xp = image_to_tensor<T>(poor);
    const auto xg = image_to_tensor<T>(good);
    const auto logits =
        head->forward(encode(xp), encode(xg), poor.height, poor.width);
    if (!nn::all_finite(logits))
      raise(ErrorCode::NonFiniteActivation, "forward: non-finite value in output logits");
    return logits;
  }

  LogitMask predict(const FloatImage& poor, const FloatImage& good) const {
    nn::NoGradGuard inference;
    const auto logits = forward_logits(poor, good);
    LogitMask out;
    out.height = logits->shape[1];
    out.width = logits->shape[2];
    out.values.assign(logits->value.begin(), logits->value.end());
    return out;
  }

  std::vector<nn::TensorPtr<T>> parameters() const {
    std::vector<nn::TensorPtr<T>> out;
    for (auto& [name, p] : this->named_parameters()) out.push_back(p);
    return out;
  }

  ModelConfig config;
  std::unique_ptr<HierarchicalEncoder<T>> trainable_branch;
  std::unique_ptr<PretrainedViT<T>> pretrained_branch;
  std::vector<std::unique_ptr<nn::Linear<T>>> adapters;
  std::vector<std::unique_ptr<FeatureFusion<T>>> ffms;
  std::unique_ptr<ChangeHead<T>> head;

 private:
  void check_input(const FloatImage& img) const {
    if (img.channels != 3) raise(ErrorCode::ShapeMismatch, "forward: input must have 3 channels");
    const int stride = config.stage_stride(config.stage_count - 1);
    if (img.height % stride != 0 || img.width % stride != 0 ||
        img.height % config.vit_patch != 0 || img.width % config.vit_patch != 0)
      raise(ErrorCode::ShapeMismatch, "forward: input size incompatible with stage strides");
  }
};

}  // namespace hcdn
