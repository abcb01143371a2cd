#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "hcdn/augment/policy.hpp"
#include "hcdn/errors.hpp"
#include "hcdn/pair.hpp"
#include "hcdn/prep/warp.hpp"
#include "hcdn/rng.hpp"

namespace hcdn {

namespace detail {

inline RigidTransform rotation_about_center(double angle_deg, int h, int w) {
  const double theta = angle_deg * 3.14159265358979323846 / 180.0;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  RigidTransform t;
  t.theta = theta;
  const double c = std::cos(theta), s = std::sin(theta);
  t.tx = cx - (c * cx - s * cy);
  t.ty = cy - (s * cx + c * cy);
  return t;
}

inline BinaryMask rotate_mask_nearest(const BinaryMask& mask, const RigidTransform& t) {
  BinaryMask out(mask.height, mask.width);
  const RigidTransform inv = t.inverse();
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const auto s = inv.apply(static_cast<double>(x), static_cast<double>(y));
      const int ix = static_cast<int>(std::lround(s[0]));
      const int iy = static_cast<int>(std::lround(s[1]));
      if (ix < 0 || ix >= mask.width || iy < 0 || iy >= mask.height) continue;  // class 0 fill
      out.at(y, x) = mask.at(iy, ix);
    }
  }
  return out;
}

inline void hflip(ImageBuffer& img) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width / 2; ++x)
      for (int c = 0; c < 3; ++c) std::swap(img.at(y, x, c), img.at(y, img.width - 1 - x, c));
}

inline void hflip(BinaryMask& mask) {
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width / 2; ++x)
      std::swap(mask.at(y, x), mask.at(y, mask.width - 1 - x));
}

inline void vflip(ImageBuffer& img) {
  for (int y = 0; y < img.height / 2; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) std::swap(img.at(y, x, c), img.at(img.height - 1 - y, x, c));
}

inline void vflip(BinaryMask& mask) {
  for (int y = 0; y < mask.height / 2; ++y)
    for (int x = 0; x < mask.width; ++x)
      std::swap(mask.at(y, x), mask.at(mask.height - 1 - y, x));
}

inline ImageBuffer crop(const ImageBuffer& img, int y0, int x0, int size) {
  ImageBuffer out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

inline BinaryMask crop(const BinaryMask& mask, int y0, int x0, int size) {
  BinaryMask out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.at(y, x) = mask.at(y0 + y, x0 + x);
  return out;
}

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
}

// brightness -> contrast -> saturation -> hue, all pointwise on RGB.
inline void photometric_jitter(ImageBuffer& img, double brightness, double contrast,
                               double saturation, double hue_deg) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
      r += brightness;
      g += brightness;
      b += brightness;
      // contrast scales around the 8-bit midpoint
      r = (r - 128.0) * contrast + 128.0;
      g = (g - 128.0) * contrast + 128.0;
      b = (b - 128.0) * contrast + 128.0;
      const double gray = 0.299 * r + 0.587 * g + 0.114 * b;
      r = gray + (r - gray) * saturation;
      g = gray + (g - gray) * saturation;
      b = gray + (b - gray) * saturation;
      if (hue_deg != 0.0) {
        // rotate hue in HSV, preserving value/saturation
        const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
        const double delta = mx - mn;
        if (delta > 1e-12) {
          double h;
          if (mx == r)
            h = 60.0 * std::fmod((g - b) / delta, 6.0);
          else if (mx == g)
            h = 60.0 * ((b - r) / delta + 2.0);
          else
            h = 60.0 * ((r - g) / delta + 4.0);
          h = std::fmod(h + hue_deg + 360.0, 360.0);
          const double c = delta;
          const double xx = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
          const double m = mn;
          double rr = 0, gg = 0, bb = 0;
          if (h < 60) { rr = c; gg = xx; }
          else if (h < 120) { rr = xx; gg = c; }
          else if (h < 180) { gg = c; bb = xx; }
          else if (h < 240) { gg = xx; bb = c; }
          else if (h < 300) { rr = xx; bb = c; }
          else { rr = c; bb = xx; }
          r = rr + m;
          g = gg + m;
          b = bb + m;
        }
      }
      img.at(y, x, 0) = clamp_u8(r);
      img.at(y, x, 1) = clamp_u8(g);
      img.at(y, x, 2) = clamp_u8(b);
    }
  }
}

}  // namespace detail

/// One geometric parameter draw (rotation, flips, crop window) shared by
/// poor, good, and mask; photometric jitter drawn independently per image.
/// Deterministic in (pair, policy, seed).
inline HousekeepingPair augment_pair(const HousekeepingPair& pair, const AugmentPolicy& policy,
                                     std::uint64_t seed) {
  policy.validate();
  HousekeepingPair out = pair;
  std::mt19937_64 rng(seed);

  if (policy.rotate_enabled && rng_bernoulli(rng, policy.rotate_prob)) {
    const double angle = rng_uniform(rng, -policy.rotate_range_deg, policy.rotate_range_deg);
    const auto t = detail::rotation_about_center(angle, out.poor.height, out.poor.width);
    out.poor = warp_good_image(out.poor, t, out.poor.height, out.poor.width).image;
    out.good = warp_good_image(out.good, t, out.good.height, out.good.width).image;
    out.mask = detail::rotate_mask_nearest(out.mask, t);
  }

  if (policy.hflip_enabled && rng_bernoulli(rng, policy.hflip_prob)) {
    detail::hflip(out.poor);
    detail::hflip(out.good);
    detail::hflip(out.mask);
  }
  if (policy.vflip_enabled && rng_bernoulli(rng, policy.vflip_prob)) {
    detail::vflip(out.poor);
    detail::vflip(out.good);
    detail::vflip(out.mask);
  }

  if (policy.crop_enabled) {
    const int size = policy.crop_size;
    if (size > out.poor.height || size > out.poor.width)
      raise(ErrorCode::CropTooLarge, "crop " + std::to_string(size) + " exceeds image " +
                                         std::to_string(out.poor.width) + "x" +
                                         std::to_string(out.poor.height));
    const std::size_t span_y = static_cast<std::size_t>(out.poor.height - size) + 1;
    const std::size_t span_x = static_cast<std::size_t>(out.poor.width - size) + 1;
    int y0 = 0, x0 = 0;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
      y0 = static_cast<int>(rng_below(rng, span_y));
      x0 = static_cast<int>(rng_below(rng, span_x));
      const BinaryMask window = detail::crop(out.mask, y0, x0, size);
      const double share1 =
          static_cast<double>(window.count_ones()) / (static_cast<double>(size) * size);
      if (std::max(share1, 1.0 - share1) <= policy.dominance_cap) break;
    }
    out.poor = detail::crop(out.poor, y0, x0, size);
    out.good = detail::crop(out.good, y0, x0, size);
    out.mask = detail::crop(out.mask, y0, x0, size);
  }

  if (policy.photometric_enabled) {
    for (ImageBuffer* img : {&out.poor, &out.good}) {
      if (!rng_bernoulli(rng, policy.photometric_prob)) continue;
      const auto& p = policy.photometric;
      const double brightness = rng_uniform(rng, -p.brightness_delta, p.brightness_delta);
      const double contrast = rng_uniform(rng, p.contrast_min, p.contrast_max);
      const double saturation = rng_uniform(rng, p.saturation_min, p.saturation_max);
      const double hue = rng_uniform(rng, -p.hue_delta_deg, p.hue_delta_deg);
      detail::photometric_jitter(*img, brightness, contrast, saturation, hue);
    }
  }

  return out;
}

/// (value − mean) / std per channel, emitted as a 3×H×W float tensor.
inline FloatImage normalize_image(const ImageBuffer& image, const NormalizationConstants& c = {}) {
  for (double s : c.stddev)
    if (s <= 0.0) raise(ErrorCode::ConfigMismatch, "normalization std must be positive");
  FloatImage out(3, image.height, image.width);
  for (int ch = 0; ch < 3; ++ch) {
    const double mean = c.mean[static_cast<std::size_t>(ch)];
    const double inv = 1.0 / c.stddev[static_cast<std::size_t>(ch)];
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        out.at(ch, y, x) = static_cast<float>((image.at(y, x, ch) - mean) * inv);
  }
  return out;
}

}  // namespace hcdn
