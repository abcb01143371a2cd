#pragma once

#include <array>

#include "hcdn/errors.hpp"

namespace hcdn {

struct PhotometricPolicy {
  double brightness_delta = 10.0;  // additive, 8-bit intensity units
  double contrast_min = 0.8;
  double contrast_max = 1.2;
  double saturation_min = 0.8;
  double saturation_max = 1.2;
  double hue_delta_deg = 10.0;
};

/// The five train-time augmentation strategies. One geometric parameter set
/// is shared across (poor, good, mask); photometric jitter is sampled per
/// image and never touches the mask.
struct AugmentPolicy {
  bool rotate_enabled = true;
  double rotate_prob = 0.5;
  double rotate_range_deg = 180.0;

  bool crop_enabled = true;
  int crop_size = 256;
  double dominance_cap = 0.75;
  int max_retries = 10;

  bool hflip_enabled = true;
  double hflip_prob = 0.5;
  bool vflip_enabled = true;
  double vflip_prob = 0.5;

  bool photometric_enabled = true;
  double photometric_prob = 1.0;
  PhotometricPolicy photometric;

  void validate() const {
    for (double p : {rotate_prob, hflip_prob, vflip_prob, photometric_prob})
      if (p < 0.0 || p > 1.0)
        raise(ErrorCode::ConfigMismatch, "augment probability outside [0,1]");
    if (rotate_range_deg < 0.0)
      raise(ErrorCode::ConfigMismatch, "rotate range must be non-negative");
    if (crop_size < 1) raise(ErrorCode::ConfigMismatch, "crop_size must be >= 1");
    if (dominance_cap <= 0.0 || dominance_cap > 1.0)
      raise(ErrorCode::ConfigMismatch, "dominance cap outside (0,1]");
    if (max_retries < 0) raise(ErrorCode::ConfigMismatch, "max_retries must be >= 0");
    if (photometric.contrast_min > photometric.contrast_max ||
        photometric.saturation_min > photometric.saturation_max)
      raise(ErrorCode::ConfigMismatch, "photometric range not well-ordered");
  }
};

struct NormalizationConstants {
  std::array<double, 3> mean{122.8, 116.7, 104.1};   // R, G, B
  std::array<double, 3> stddev{68.5, 66.6, 70.3};
};

}  // namespace hcdn
