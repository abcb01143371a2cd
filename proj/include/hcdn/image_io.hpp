#pragma once

#include <filesystem>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "hcdn/errors.hpp"
#include "hcdn/image.hpp"

namespace hcdn {

inline ImageBuffer load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    raise(ErrorCode::MissingFile, path.string());
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty())
    raise(ErrorCode::DecodeFailure, path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  ImageBuffer img(rgb.rows, rgb.cols);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[x][c];
  }
  return img;
}

inline void save_image(const ImageBuffer& img, const std::filesystem::path& path) {
  cv::Mat rgb(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) row[x][c] = img.at(y, x, c);
  }
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr))
    raise(ErrorCode::IoError, "cannot write image " + path.string());
}

/// Loads a stored mask and binarizes it: any nonzero sample maps to 1
/// (annotation masks are commonly saved with 255 as the set value).
inline BinaryMask load_mask(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    raise(ErrorCode::MissingFile, path.string());
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty())
    raise(ErrorCode::DecodeFailure, path.string());
  BinaryMask mask(gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) mask.at(y, x) = row[x] ? 1 : 0;
  }
  return mask;
}

inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  cv::Mat gray(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  if (!cv::imwrite(path.string(), gray))
    raise(ErrorCode::IoError, "cannot write mask " + path.string());
}

}  // namespace hcdn
