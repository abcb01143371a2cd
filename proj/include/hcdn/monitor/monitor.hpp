#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/videoio.hpp>

#include "hcdn/augment/augment.hpp"
#include "hcdn/errors.hpp"
#include "hcdn/image_io.hpp"
#include "hcdn/image_ops.hpp"
#include "hcdn/model/checkpoint.hpp"
#include "hcdn/model/hcdn.hpp"
#include "hcdn/prep/stats.hpp"

namespace hcdn {

enum class SourceKind { Directory, VideoFile };

struct FrameSource {
  SourceKind kind = SourceKind::Directory;
  std::filesystem::path path;
  int sample_interval = 1;
};

struct Frame {
  long long frame_id = 0;  // index within the source (0, k, 2k, ...)
  std::string origin;      // file path, or "<video>#<index>"
  ImageBuffer image;
};

namespace detail {

inline bool image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

}  // namespace detail

/// Samples the source at indices 0, k, 2k, ... in order. An empty directory
/// yields an empty stream; a source that cannot be opened raises
/// UnreadableSource.
inline std::vector<Frame> grab_frames(const FrameSource& source) {
  if (source.sample_interval < 1)
    raise(ErrorCode::ConfigMismatch, "monitor: sample_interval must be >= 1");
  std::vector<Frame> frames;

  if (source.kind == SourceKind::Directory) {
    std::error_code ec;
    if (!std::filesystem::is_directory(source.path, ec))
      raise(ErrorCode::UnreadableSource, "not a readable directory: " + source.path.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(source.path))
      if (entry.is_regular_file() && detail::image_file(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); i += source.sample_interval)
      frames.push_back({static_cast<long long>(i), files[i].string(), load_image(files[i])});
    return frames;
  }

  cv::VideoCapture cap(source.path.string());
  if (!cap.isOpened())
    raise(ErrorCode::UnreadableSource, "cannot open video: " + source.path.string());
  cv::Mat bgr;
  for (long long idx = 0; cap.read(bgr); ++idx) {
    if (idx % source.sample_interval != 0) continue;
    if (bgr.type() != CV_8UC3)
      raise(ErrorCode::DecodeFailure, "monitor: unexpected video frame format");
    ImageBuffer img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y)
      for (int x = 0; x < bgr.cols; ++x) {
        const auto px = bgr.at<cv::Vec3b>(y, x);
        img.at(y, x, 0) = px[2];
        img.at(y, x, 1) = px[1];
        img.at(y, x, 2) = px[0];
      }
    frames.push_back({idx, source.path.string() + "#" + std::to_string(idx), std::move(img)});
  }
  return frames;
}

struct AlertPayload {
  long long frame_id = 0;
  std::string timestamp;
  double change_ratio = 0.0;  // in [0,1]
  std::string mask_artifact_path;
  std::string source_path;
};

/// Wire format of the webhook POST body.
inline nlohmann::json alert_payload_json(const AlertPayload& p) {
  return {{"frame_id", p.frame_id},
          {"timestamp", p.timestamp},
          {"change_ratio", p.change_ratio},
          {"mask_uri", p.mask_artifact_path},
          {"source", p.source_path}};
}

/// Outbound alert channel. Implementations raise SinkUnavailable on a
/// failed delivery; the pipeline records the failure and keeps going.
class AlertSink {
 public:
  virtual ~AlertSink() = default;
  virtual void deliver(const AlertPayload& payload) = 0;
};

/// In-process sink for tests and dry runs; flip `refuse` to inject faults.
class MemorySink : public AlertSink {
 public:
  bool refuse = false;
  std::vector<AlertPayload> delivered;

  void deliver(const AlertPayload& payload) override {
    if (refuse) raise(ErrorCode::SinkUnavailable, "memory sink is refusing deliveries");
    delivered.push_back(payload);
  }
};

struct DeliveryRecord {
  long long frame_id = 0;
  std::string origin;
  double change_ratio = 0.0;
  bool alerted = false;    // change_ratio >= threshold
  bool delivered = false;  // sink accepted the payload
  std::string detail;      // failure reason when a delivery was refused
};

using FramePredictor = std::function<BinaryMask(const ImageBuffer&)>;
using TimestampFn = std::function<std::string()>;

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Per frame: predict a change mask, compute change_ratio, and emit an
/// alert iff change_ratio >= threshold. Emission is therefore monotone in
/// the threshold, records keep source order, and sink failures never stop
/// the loop (at-most-once delivery, failure recorded).
inline std::vector<DeliveryRecord> detect_and_alert(const std::vector<Frame>& frames,
                                                    const FramePredictor& predict,
                                                    double threshold, AlertSink& sink,
                                                    const std::filesystem::path& mask_dir = {},
                                                    const TimestampFn& now = utc_timestamp) {
  if (threshold < 0.0)
    raise(ErrorCode::ConfigMismatch, "monitor: threshold must be non-negative");
  if (!mask_dir.empty()) std::filesystem::create_directories(mask_dir);

  std::vector<DeliveryRecord> records;
  records.reserve(frames.size());
  for (const Frame& frame : frames) {
    const BinaryMask mask = predict(frame.image);
    DeliveryRecord rec;
    rec.frame_id = frame.frame_id;
    rec.origin = frame.origin;
    rec.change_ratio = change_area_ratio(mask);
    rec.alerted = rec.change_ratio >= threshold;
    if (rec.alerted) {
      AlertPayload payload;
      payload.frame_id = frame.frame_id;
      payload.timestamp = now();
      payload.change_ratio = rec.change_ratio;
      payload.source_path = frame.origin;
      if (!mask_dir.empty()) {
        const auto mask_path = mask_dir / ("frame_" + std::to_string(frame.frame_id) + ".png");
        save_mask(mask, mask_path);
        payload.mask_artifact_path = mask_path.string();
      }
      try {
        sink.deliver(payload);
        rec.delivered = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SinkUnavailable) throw;
        rec.detail = e.what();
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

/// Model-backed predictor. The frame is compared against a fixed operator
/// baseline of the camera view; with no reference the good input is a black
/// frame and the model degenerates to a single-image segmenter. Both inputs
/// run at the checkpoint's native training resolution. Any failure to load
/// the checkpoint is fatal.
inline FramePredictor make_frame_predictor(const std::filesystem::path& checkpoint,
                                           const std::optional<ImageBuffer>& reference,
                                           const NormalizationConstants& consts = {}) {
  std::shared_ptr<HcdnModel<float>> model;
  try {
    const ModelConfig cfg = peek_checkpoint_config(checkpoint);
    model = std::make_shared<HcdnModel<float>>(cfg);
    load_checkpoint(checkpoint, *model);
  } catch (const Error& e) {
    raise(ErrorCode::ModelLoadFailure, std::string("monitor: ") + e.what());
  }
  const int side = model->config.input_size;
  FloatImage good = reference
                        ? normalize_image(resize_image(*reference, side, side), consts)
                        : blackout_image(side, side, consts);
  return [model, good = std::move(good), consts, side](const ImageBuffer& frame) {
    const FloatImage poor = normalize_image(resize_image(frame, side, side), consts);
    return threshold_mask(model->predict(poor, good));
  };
}

}  // namespace hcdn
