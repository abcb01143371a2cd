#pragma once

#include <cmath>

#include "hcdn/image.hpp"

namespace hcdn {

/// Bilinear resize with half-pixel-center coordinate mapping.
inline ImageBuffer resize_image(const ImageBuffer& src, int out_h, int out_w) {
  if (out_h == src.height && out_w == src.width) return src;
  ImageBuffer out(out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - wy) * ((1 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c)) +
                         wy * ((1 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c));
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
      }
    }
  }
  return out;
}

/// Nearest-neighbor mask resize; keeps values strictly in {0,1}.
inline BinaryMask resize_mask(const BinaryMask& src, int out_h, int out_w) {
  if (out_h == src.height && out_w == src.width) return src;
  BinaryMask out(out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    int iy = static_cast<int>(std::lround((y + 0.5) * sy - 0.5));
    iy = std::min(std::max(iy, 0), src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      int ix = static_cast<int>(std::lround((x + 0.5) * sx - 0.5));
      ix = std::min(std::max(ix, 0), src.width - 1);
      out.at(y, x) = src.at(iy, ix);
    }
  }
  return out;
}

}  // namespace hcdn
