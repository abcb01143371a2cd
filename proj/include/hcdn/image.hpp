#pragma once

#include <cstdint>
#include <vector>

#include "hcdn/errors.hpp"

namespace hcdn {

namespace detail {
// Validates before the member vector allocates, so bad dimensions raise
// Error instead of overflowing the size computation.
inline std::size_t checked_area(int h, int w) {
  if (h < 1 || w < 1) raise(ErrorCode::DimensionMismatch, "image dimensions must be >= 1");
  return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
}
}  // namespace detail

/// 8-bit color image, row-major, interleaved channels in R,G,B order.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  ImageBuffer() = default;
  ImageBuffer(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(detail::checked_area(h, w) * 3, fill) {}

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool same_shape(const ImageBuffer& other) const {
    return height == other.height && width == other.width;
  }

  bool operator==(const ImageBuffer&) const = default;
};

/// Per-pixel {0,1} mask; 1 marks a changed (poor-housekeeping) pixel.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;  // strictly 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), values(detail::checked_area(h, w), fill ? 1 : 0) {}

  std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }

  std::size_t count_ones() const {
    std::size_t n = 0;
    for (auto v : values) n += v;
    return n;
  }

  bool is_binary() const {
    for (auto v : values)
      if (v > 1) return false;
    return true;
  }

  bool operator==(const BinaryMask&) const = default;
};

/// Dense float tensor in [channel][row][column] layout.
struct FloatImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FloatImage() = default;
  FloatImage(int c, int h, int w, float fill = 0.f)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, fill) {}

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

}  // namespace hcdn
