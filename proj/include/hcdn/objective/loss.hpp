#pragma once

#include "hcdn/image.hpp"
#include "hcdn/nn/ops.hpp"

namespace hcdn {

struct LossConfig {
  double positive_weight = 0.3;  // w of Eq. 10; config key loss.positive_weight
  double probability_clamp = 1e-7;

  void validate() const {
    if (positive_weight < 0.0 || positive_weight > 1.0)
      raise(ErrorCode::ConfigMismatch, "loss: positive_weight must lie in [0,1]");
    if (probability_clamp <= 0.0 || probability_clamp >= 0.5)
      raise(ErrorCode::ConfigMismatch, "loss: probability_clamp must lie in (0,0.5)");
  }
};

/// Eq. 10: mean over pixels of -[w y log(p) + (1-w)(1-y) log(1-p)] with
/// p = sigmoid(logit) clamped to [eps, 1-eps]. Differentiable w.r.t. logits.
template <typename T>
nn::TensorPtr<T> weighted_cross_entropy(const nn::TensorPtr<T>& logits, const BinaryMask& target,
                                        const LossConfig& cfg = {}) {
  using namespace nn;
  cfg.validate();
  const auto pixels = static_cast<std::size_t>(target.height) * target.width;
  if (logits->numel() != pixels)
    raise(ErrorCode::ShapeMismatch, "loss: logit/target pixel counts differ");
  if (!target.is_binary()) raise(ErrorCode::NonBinaryTarget, "loss: target mask not binary");

  const T w = static_cast<T>(cfg.positive_weight);
  const T eps = static_cast<T>(cfg.probability_clamp);
  std::vector<T> wy(pixels), w1y(pixels), ones(pixels, T(1));
  for (std::size_t i = 0; i < pixels; ++i) {
    wy[i] = target.values[i] ? w : T(0);
    w1y[i] = target.values[i] ? T(0) : T(1) - w;
  }
  const auto shape = logits->shape;
  const auto p = clamp(sigmoid(logits), eps, T(1) - eps);
  const auto pos = mul(make_const<T>(shape, wy), log_op(p));
  const auto neg = mul(make_const<T>(shape, w1y), log_op(sub(make_const<T>(shape, ones), p)));
  return scale(mean_all(add(pos, neg)), T(-1));
}

/// Batch reduction: mean of the per-sample means.
template <typename T>
nn::TensorPtr<T> weighted_cross_entropy_batch(const std::vector<nn::TensorPtr<T>>& logits,
                                              const std::vector<const BinaryMask*>& targets,
                                              const LossConfig& cfg = {}) {
  using namespace nn;
  if (logits.empty() || logits.size() != targets.size())
    raise(ErrorCode::ShapeMismatch, "loss: empty or mismatched batch");
  TensorPtr<T> total;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto li = weighted_cross_entropy(logits[i], *targets[i], cfg);
    total = i == 0 ? li : add(total, li);
  }
  return scale(total, T(1) / static_cast<T>(logits.size()));
}

}  // namespace hcdn
