#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hcdn/harness/config.hpp"
#include "hcdn/harness/evaluate.hpp"
#include "hcdn/harness/experiments.hpp"
#include "hcdn/harness/trainer.hpp"
#include "hcdn/manifest.hpp"
#include "hcdn/monitor/monitor.hpp"
#include "hcdn/monitor/webhook.hpp"
#include "hcdn/prep/driver.hpp"
#include "hcdn/prep/stats.hpp"
#include "hcdn/split.hpp"

namespace {

namespace fs = std::filesystem;

// --data accepts either a prepared root carrying manifest.json or a raw
// dataset directory laid out as <root>/<pair_id>/{poor,good,mask}.png.
hcdn::DatasetManifest open_dataset(const fs::path& root) {
  const fs::path manifest_file = root / "manifest.json";
  if (fs::exists(manifest_file)) return hcdn::load_manifest(manifest_file);
  return hcdn::scan_dataset_dir(root);
}

hcdn::SplitAssignment open_or_make_split(const std::string& split_file,
                                         const hcdn::DatasetManifest& manifest,
                                         std::uint64_t seed, const fs::path& run_dir) {
  if (!split_file.empty()) return hcdn::load_split(split_file);
  const auto split = hcdn::split_dataset(manifest, seed);
  hcdn::save_split(split, run_dir / "split.json");
  return split;
}

void print_summary_row(const std::string& label, const hcdn::MetricsSummary& s) {
  std::printf("%-22s aACC %7.2f  mFscore %7.2f  mPrecision %7.2f  mRecall %7.2f  mIoU %7.2f\n",
              label.c_str(), s.aACC, s.mFscore, s.mPrecision, s.mRecall, s.mIoU);
}

void print_report(const hcdn::MetricsReport& report) {
  std::cout << hcdn::metrics_report_to_json(report).dump(2) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Housekeeping change-detection toolkit"};
  app.require_subcommand(1);

  // prep
  std::string prep_manifest, prep_out;
  hcdn::GateParams gate;
  auto* prep = app.add_subcommand("prep", "Gate and align raw pairs into a training set");
  prep->add_option("--manifest", prep_manifest, "Raw dataset manifest or directory")->required();
  prep->add_option("--out", prep_out, "Output dataset directory")->required();
  prep->add_option("--ratio", gate.ratio_threshold, "Ratio-test threshold")->capture_default_str();
  prep->add_option("--blank-max", gate.blank_max, "Max blank fraction after warp")->capture_default_str();
  prep->callback([&] {
    const auto manifest =
        fs::is_directory(prep_manifest) ? open_dataset(prep_manifest)
                                        : hcdn::load_manifest(prep_manifest);
    const auto summary = hcdn::run_prep(manifest, prep_out, gate);
    std::printf("prep: %d/%d pairs accepted -> %s\n", summary.accepted, summary.total,
                prep_out.c_str());
  });

  // stats
  std::string stats_manifest, stats_out = "stats.json";
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->add_option("--manifest", stats_manifest, "Dataset manifest or directory")->required();
  stats->add_option("--out", stats_out, "Output JSON file")->capture_default_str();
  stats->callback([&] {
    const auto manifest =
        fs::is_directory(stats_manifest) ? open_dataset(stats_manifest)
                                         : hcdn::load_manifest(stats_manifest);
    hcdn::save_stats(hcdn::dataset_stats(manifest), stats_out);
    std::printf("stats: %zu pairs -> %s\n", manifest.records.size(), stats_out.c_str());
  });

  // split
  std::string split_manifest, split_out = "split.json";
  std::uint64_t split_seed = 0;
  bool stratified = false;
  auto* split_cmd = app.add_subcommand("split", "Deterministic 7:2:1 split");
  split_cmd->add_option("--manifest", split_manifest, "Dataset manifest or directory")->required();
  split_cmd->add_option("--seed", split_seed, "Split seed")->capture_default_str();
  split_cmd->add_option("--out", split_out, "Output split file")->capture_default_str();
  split_cmd->add_flag("--stratified", stratified, "Stratify by type tag");
  split_cmd->callback([&] {
    const auto manifest =
        fs::is_directory(split_manifest) ? open_dataset(split_manifest)
                                         : hcdn::load_manifest(split_manifest);
    const auto split = hcdn::split_dataset(manifest, split_seed, {}, stratified);
    hcdn::save_split(split, split_out);
    std::printf("split: %zu train / %zu val / %zu test -> %s\n", split.train.size(),
                split.val.size(), split.test.size(), split_out.c_str());
  });

  // train
  std::string train_config, train_data, train_out, train_split;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train_config, "TOML config file")->required();
  train_cmd->add_option("--data", train_data, "Prepared dataset root")->required();
  train_cmd->add_option("--out", train_out, "Run directory")->required();
  train_cmd->add_option("--split", train_split, "Existing split file (default: fresh split)");
  train_cmd->callback([&] {
    const auto cfg = hcdn::load_train_config(train_config);
    const auto manifest = open_dataset(train_data);
    fs::create_directories(train_out);
    const auto split = open_or_make_split(train_split, manifest, cfg.seed, train_out);
    const auto run = hcdn::train(cfg, split, manifest, train_out);
    std::printf("train: %lld steps in %.1fs, final %s\n", cfg.total_steps, run.wall_seconds,
                run.final_checkpoint.c_str());
    if (!run.val_reports.empty())
      std::printf("train: best val mIoU %.2f%% (%s)\n", run.best_val_miou * 100.0,
                  run.best_checkpoint.c_str());
  });

  // eval
  std::string eval_checkpoint, eval_split_part = "test", eval_data, eval_split_file, eval_out;
  int eval_resize = 1024;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", eval_split_part, "Split part")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--data", eval_data, "Prepared dataset root")->required();
  eval_cmd->add_option("--split-file", eval_split_file, "Split file")->required();
  eval_cmd->add_option("--out", eval_out, "Write the JSON report here as well");
  eval_cmd->add_option("--resize", eval_resize, "Eval resolution")->capture_default_str();
  eval_cmd->callback([&] {
    const auto manifest = open_dataset(eval_data);
    const auto split = hcdn::load_split(eval_split_file);
    const auto& ids = eval_split_part == "train" ? split.train
                      : eval_split_part == "val" ? split.val
                                                 : split.test;
    hcdn::EvalOptions opts;
    opts.resize = eval_resize;
    const auto report = hcdn::evaluate_checkpoint(eval_checkpoint, manifest, ids, opts);
    print_report(report);
    if (!eval_out.empty()) hcdn::save_metrics_report(eval_out, report);
  });

  // ablate
  std::string abl_config, abl_data, abl_out, abl_split;
  auto* ablate_cmd = app.add_subcommand("ablate", "Good-image ablation (paired runs + delta)");
  ablate_cmd->add_option("--config", abl_config, "TOML config file")->required();
  ablate_cmd->add_option("--data", abl_data, "Prepared dataset root")->required();
  ablate_cmd->add_option("--out", abl_out, "Output directory")->required();
  ablate_cmd->add_option("--split", abl_split, "Existing split file (default: fresh split)");
  ablate_cmd->callback([&] {
    const auto cfg = hcdn::load_train_config(abl_config);
    const auto manifest = open_dataset(abl_data);
    fs::create_directories(abl_out);
    const auto split = open_or_make_split(abl_split, manifest, cfg.seed, abl_out);
    const auto result = hcdn::run_ablation(cfg, split, manifest, abl_out);
    print_summary_row("with all images", result.with_all);
    print_summary_row("without good images", result.without_good);
    print_summary_row("difference", result.difference);
  });

  // segmode
  std::string seg_config, seg_raw, seg_out;
  auto* seg_cmd = app.add_subcommand("segmode", "Segmentation-mode comparison on raw pairs");
  seg_cmd->add_option("--config", seg_config, "TOML config file")->required();
  seg_cmd->add_option("--raw-data", seg_raw, "Raw (unaligned) dataset root")->required();
  seg_cmd->add_option("--out", seg_out, "Output directory")->required();
  seg_cmd->callback([&] {
    const auto cfg = hcdn::load_train_config(seg_config);
    const auto manifest = open_dataset(seg_raw);
    fs::create_directories(seg_out);
    const auto result = hcdn::run_segmentation_mode(cfg, manifest, seg_out);
    for (const auto& [label, summary] : result.rows) print_summary_row(label, summary);
  });

  // predict
  std::string pred_checkpoint, pred_poor, pred_good, pred_out = "mask.png";
  bool pred_blackout = false;
  auto* pred_cmd = app.add_subcommand("predict", "Predict a change mask for one pair");
  pred_cmd->add_option("--checkpoint", pred_checkpoint, "Checkpoint file")->required();
  pred_cmd->add_option("--poor", pred_poor, "Poor-housekeeping image")->required();
  pred_cmd->add_option("--good", pred_good, "Good-housekeeping reference image");
  pred_cmd->add_option("--out", pred_out, "Output mask PNG")->capture_default_str();
  pred_cmd->add_flag("--blackout-good", pred_blackout, "Use a black reference (segmentation mode)");
  pred_cmd->callback([&] {
    if (pred_good.empty() && !pred_blackout)
      hcdn::raise(hcdn::ErrorCode::ConfigMismatch, "predict: pass --good or --blackout-good");
    std::optional<hcdn::ImageBuffer> reference;
    if (!pred_blackout) reference = hcdn::load_image(pred_good);
    const auto predict = hcdn::make_frame_predictor(pred_checkpoint, reference);
    const auto mask = predict(hcdn::load_image(pred_poor));
    hcdn::save_mask(mask, pred_out);
    std::printf("predict: change ratio %.4f -> %s\n", hcdn::change_area_ratio(mask),
                pred_out.c_str());
  });

  // monitor
  std::string mon_source, mon_checkpoint, mon_sink, mon_reference, mon_mask_dir;
  int mon_interval = 1;
  double mon_threshold = 0.10;
  auto* mon_cmd = app.add_subcommand("monitor", "Watch a frame source and emit alerts");
  mon_cmd->add_option("--source", mon_source, "Image directory or video file")->required();
  mon_cmd->add_option("--interval", mon_interval, "Sample every N frames")->capture_default_str();
  mon_cmd->add_option("--checkpoint", mon_checkpoint, "Checkpoint file")->required();
  mon_cmd->add_option("--sink-url", mon_sink, "Webhook endpoint (http://...)");
  mon_cmd->add_option("--threshold", mon_threshold, "Alert threshold on change ratio")->capture_default_str();
  mon_cmd->add_option("--reference", mon_reference,
                      "Baseline good image (default: black reference)");
  mon_cmd->add_option("--mask-dir", mon_mask_dir, "Directory for alert mask artifacts");
  mon_cmd->callback([&] {
    hcdn::FrameSource source;
    source.kind = fs::is_directory(mon_source) ? hcdn::SourceKind::Directory
                                               : hcdn::SourceKind::VideoFile;
    source.path = mon_source;
    source.sample_interval = mon_interval;

    std::optional<hcdn::ImageBuffer> reference;
    if (!mon_reference.empty()) reference = hcdn::load_image(mon_reference);
    const auto predict = hcdn::make_frame_predictor(mon_checkpoint, reference);

    hcdn::MemorySink memory;
    std::unique_ptr<hcdn::WebhookSink> webhook;
    hcdn::AlertSink* sink = &memory;
    if (!mon_sink.empty()) {
      webhook = std::make_unique<hcdn::WebhookSink>(mon_sink);
      sink = webhook.get();
    }

    const auto frames = hcdn::grab_frames(source);
    const auto records =
        hcdn::detect_and_alert(frames, predict, mon_threshold, *sink, mon_mask_dir);
    for (const auto& rec : records) {
      const std::string detail = rec.detail.empty() ? "" : " (" + rec.detail + ")";
      std::printf("frame %lld  ratio %.4f  %s%s\n", rec.frame_id, rec.change_ratio,
                  rec.alerted ? (rec.delivered ? "ALERT delivered" : "ALERT failed") : "ok",
                  detail.c_str());
    }
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hcdn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
