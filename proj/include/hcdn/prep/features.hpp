#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>
#include <opencv2/imgproc.hpp>

#include "hcdn/errors.hpp"
#include "hcdn/image.hpp"

namespace hcdn {

struct SiftParams {
  int octave_layers = 3;
  double contrast_threshold = 0.04;
  double edge_threshold = 10.0;
  double sigma = 1.6;
  int max_features = 0;  // 0 = unlimited
};

struct KeypointSet {
  std::vector<std::array<double, 2>> locations;  // (x, y) sub-pixel
  std::vector<double> scales;
  std::vector<double> orientations;  // radians
  std::vector<std::array<float, 128>> descriptors;

  std::size_t size() const { return locations.size(); }
  bool empty() const { return locations.empty(); }
};

/// SIFT keypoints + descriptors. Detection order from the library is not
/// specified, so results are re-sorted by (x, y, scale, angle, descriptor)
/// to make the output a pure function of the pixels.
inline KeypointSet extract_local_features(const ImageBuffer& image, const SiftParams& params = {}) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat gray;
  cv::cvtColor(rgb, gray, cv::COLOR_RGB2GRAY);

  auto sift = cv::SIFT::create(params.max_features, params.octave_layers,
                               params.contrast_threshold, params.edge_threshold, params.sigma);
  std::vector<cv::KeyPoint> kps;
  cv::Mat desc;
  sift->detectAndCompute(gray, cv::noArray(), kps, desc);

  std::vector<std::size_t> order(kps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = kps[i];
    const auto& b = kps[j];
    if (a.pt.x != b.pt.x) return a.pt.x < b.pt.x;
    if (a.pt.y != b.pt.y) return a.pt.y < b.pt.y;
    if (a.size != b.size) return a.size < b.size;
    if (a.angle != b.angle) return a.angle < b.angle;
    if (a.response != b.response) return a.response < b.response;
    for (int c = 0; c < 128; ++c) {
      const float da = desc.at<float>(static_cast<int>(i), c);
      const float db = desc.at<float>(static_cast<int>(j), c);
      if (da != db) return da < db;
    }
    return false;
  });

  KeypointSet out;
  out.locations.reserve(kps.size());
  out.scales.reserve(kps.size());
  out.orientations.reserve(kps.size());
  out.descriptors.reserve(kps.size());
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  for (const std::size_t i : order) {
    const auto& kp = kps[i];
    out.locations.push_back({static_cast<double>(kp.pt.x), static_cast<double>(kp.pt.y)});
    out.scales.push_back(static_cast<double>(kp.size));
    out.orientations.push_back(static_cast<double>(kp.angle) * kDegToRad);
    std::array<float, 128> d{};
    for (int c = 0; c < 128; ++c) d[static_cast<std::size_t>(c)] = desc.at<float>(static_cast<int>(i), c);
    out.descriptors.push_back(d);
  }
  return out;
}

}  // namespace hcdn
