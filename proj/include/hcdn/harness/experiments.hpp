#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcdn/harness/trainer.hpp"

namespace hcdn {

/// One row of a comparison table, on the percent scale of the result tables.
struct MetricsSummary {
  double aACC = 0.0, mFscore = 0.0, mPrecision = 0.0, mRecall = 0.0, mIoU = 0.0;
};

inline MetricsSummary summarize(const MetricsReport& r) {
  return {r.aacc * 100.0, r.m_fscore * 100.0, r.m_precision * 100.0, r.m_recall * 100.0,
          r.m_iou * 100.0};
}

inline MetricsSummary operator-(const MetricsSummary& a, const MetricsSummary& b) {
  return {a.aACC - b.aACC, a.mFscore - b.mFscore, a.mPrecision - b.mPrecision,
          a.mRecall - b.mRecall, a.mIoU - b.mIoU};
}

inline nlohmann::json summary_json(const std::string& label, const MetricsSummary& s) {
  return {{"label", label},
          {"aACC", detail::percent2(s.aACC / 100.0)},
          {"mFscore", detail::percent2(s.mFscore / 100.0)},
          {"mPrecision", detail::percent2(s.mPrecision / 100.0)},
          {"mRecall", detail::percent2(s.mRecall / 100.0)},
          {"mIoU", detail::percent2(s.mIoU / 100.0)}};
}

namespace detail {

/// Experiments score on the validation bucket when it exists, otherwise on
/// the training bucket (tiny fixtures may put everything in train).
inline const std::vector<std::string>& eval_ids(const SplitAssignment& split) {
  return split.val.empty() ? split.train : split.val;
}

inline void save_rows(const std::filesystem::path& path, const nlohmann::json& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << nlohmann::json{{"rows", rows}}.dump(2) << "\n";
}

}  // namespace detail

struct AblationResult {
  MetricsSummary with_all;
  MetricsSummary without_good;
  MetricsSummary difference;  // with_all - without_good
  RunRecord run_all;
  RunRecord run_without_good;
};

/// Trains twice with identical seeds — once normally, once with the good
/// image blacked out for every sample (train and validation alike) — then
/// scores both and emits the delta row. Writes ablation.json under out_dir.
inline AblationResult run_ablation(const TrainConfig& cfg, const SplitAssignment& split,
                                   const DatasetManifest& manifest,
                                   const std::filesystem::path& out_dir) {
  AblationResult result;
  result.run_all = train(cfg, split, manifest, out_dir / "with_all");
  result.run_without_good =
      train(cfg, split, manifest, out_dir / "without_good", TrainOptions{true, false});

  const auto& ids = detail::eval_ids(split);
  const EvalOptions base{cfg.input_resize, cfg.normalize, false, false};
  EvalOptions blind = base;
  blind.blackout_good = true;
  result.with_all =
      summarize(evaluate_checkpoint(result.run_all.best_checkpoint, manifest, ids, base));
  result.without_good = summarize(
      evaluate_checkpoint(result.run_without_good.best_checkpoint, manifest, ids, blind));
  result.difference = result.with_all - result.without_good;

  detail::save_rows(out_dir / "ablation.json",
                    {summary_json("with all images", result.with_all),
                     summary_json("without good images", result.without_good),
                     summary_json("difference", result.difference)});
  return result;
}

struct SegmentationModeResult {
  // Row order: without poor, without good, all.
  std::vector<std::pair<std::string, MetricsSummary>> rows;
  std::vector<RunRecord> runs;
};

/// Trains directly on raw (unaligned) pairs under three input conditions.
/// With an input blacked out the network sees a single image, so this mode
/// treats it as a plain segmenter of the remaining view.
inline SegmentationModeResult run_segmentation_mode(const TrainConfig& cfg,
                                                    const DatasetManifest& raw_manifest,
                                                    const std::filesystem::path& out_dir) {
  const SplitAssignment split = split_dataset(raw_manifest, cfg.seed);
  const auto& ids = detail::eval_ids(split);

  struct Condition {
    const char* label;
    const char* slug;
    TrainOptions opts;
  };
  const Condition conditions[] = {
      {"without poor images", "without_poor", {false, true}},
      {"without good images", "without_good", {true, false}},
      {"with all images", "with_all", {false, false}},
  };

  SegmentationModeResult result;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& cond : conditions) {
    RunRecord run = train(cfg, split, raw_manifest, out_dir / cond.slug, cond.opts);
    EvalOptions opts{cfg.input_resize, cfg.normalize, cond.opts.blackout_good,
                     cond.opts.blackout_poor};
    const MetricsSummary s =
        summarize(evaluate_checkpoint(run.best_checkpoint, raw_manifest, ids, opts));
    rows.push_back(summary_json(cond.label, s));
    result.rows.emplace_back(cond.label, s);
    result.runs.push_back(std::move(run));
  }
  detail::save_rows(out_dir / "segmode.json", rows);
  return result;
}

}  // namespace hcdn
