#pragma once

#include <cmath>

#include "hcdn/image.hpp"
#include "hcdn/prep/alignment.hpp"

namespace hcdn {

struct WarpResult {
  ImageBuffer image;
  double blank_ratio = 0.0;
};

/// Resamples `good` into poor-image coordinates: output(p) = good(t⁻¹(p)),
/// bilinear. Pixels whose source falls outside the good image are written as
/// 0 on all channels and counted into blank_ratio.
inline WarpResult warp_good_image(const ImageBuffer& good, const RigidTransform& t, int target_h,
                                  int target_w) {
  WarpResult result{ImageBuffer(target_h, target_w), 0.0};
  const RigidTransform inv = t.inverse();
  const double max_x = static_cast<double>(good.width - 1);
  const double max_y = static_cast<double>(good.height - 1);
  std::size_t blank = 0;
  for (int y = 0; y < target_h; ++y) {
    for (int x = 0; x < target_w; ++x) {
      const auto s = inv.apply(static_cast<double>(x), static_cast<double>(y));
      if (s[0] < 0.0 || s[0] > max_x || s[1] < 0.0 || s[1] > max_y) {
        ++blank;
        continue;  // buffer is zero-initialized
      }
      const int x0 = static_cast<int>(std::floor(s[0]));
      const int y0 = static_cast<int>(std::floor(s[1]));
      const int x1 = std::min(x0 + 1, good.width - 1);
      const int y1 = std::min(y0 + 1, good.height - 1);
      const double fx = s[0] - x0, fy = s[1] - y0;
      for (int c = 0; c < 3; ++c) {
        const double v00 = good.at(y0, x0, c), v01 = good.at(y0, x1, c);
        const double v10 = good.at(y1, x0, c), v11 = good.at(y1, x1, c);
        const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
        result.image.at(y, x, c) =
            static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
      }
    }
  }
  result.blank_ratio = static_cast<double>(blank) / (static_cast<double>(target_h) * target_w);
  return result;
}

}  // namespace hcdn
