#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hcdn/augment/augment.hpp"
#include "hcdn/errors.hpp"
#include "hcdn/image_ops.hpp"
#include "hcdn/manifest.hpp"
#include "hcdn/metrics/metrics.hpp"
#include "hcdn/model/checkpoint.hpp"
#include "hcdn/model/hcdn.hpp"
#include "hcdn/split.hpp"

namespace hcdn {

/// Receives a pair already resized to the evaluation resolution and returns
/// a prediction mask of the same shape.
using MaskPredictor = std::function<BinaryMask(const HousekeepingPair&)>;

struct EvalOptions {
  int resize = 1024;  // whole-image eval: resize, never crop
  NormalizationConstants normalize;
  bool blackout_good = false;
  bool blackout_poor = false;
};

/// Global confusion pooling over the split: one confusion matrix accumulated
/// across every pixel of every pair, then reported once. Scoring happens at
/// the eval resolution (prediction and ground truth are both resized).
inline MetricsReport evaluate_pairs(const DatasetManifest& manifest,
                                    const std::vector<std::string>& ids,
                                    const MaskPredictor& predict, int resize) {
  const auto records = select_records(manifest, ids);
  ConfusionCounts pooled;
  for (const auto& rec : records) {
    HousekeepingPair pair = load_pair(manifest, rec);
    pair.poor = resize_image(pair.poor, resize, resize);
    pair.good = resize_image(pair.good, resize, resize);
    pair.mask = resize_mask(pair.mask, resize, resize);
    const BinaryMask pred = predict(pair);
    pooled = accumulate_confusion(pred, pair.mask, pooled);
  }
  return full_report(pooled);
}

template <typename T>
MaskPredictor make_model_predictor(const HcdnModel<T>& model, const EvalOptions& opts) {
  return [&model, opts](const HousekeepingPair& pair) {
    NormalizedPair np{normalize_image(pair.poor, opts.normalize),
                      normalize_image(pair.good, opts.normalize)};
    if (opts.blackout_good) blackout_good(np, opts.normalize);
    if (opts.blackout_poor) blackout_poor(np, opts.normalize);
    return threshold_mask(model.predict(np.poor, np.good));
  };
}

template <typename T>
MetricsReport evaluate_model(const HcdnModel<T>& model, const DatasetManifest& manifest,
                             const std::vector<std::string>& ids, const EvalOptions& opts) {
  return evaluate_pairs(manifest, ids, make_model_predictor(model, opts), opts.resize);
}

inline MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                         const DatasetManifest& manifest,
                                         const std::vector<std::string>& ids,
                                         EvalOptions opts) {
  const ModelConfig cfg = peek_checkpoint_config(checkpoint);
  HcdnModel<float> model(cfg);
  load_checkpoint(checkpoint, model);
  return evaluate_model(model, manifest, ids, opts);
}

}  // namespace hcdn
