#pragma once

#include <cmath>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hcdn/augment/augment.hpp"
#include "hcdn/harness/config.hpp"
#include "hcdn/harness/evaluate.hpp"
#include "hcdn/manifest.hpp"
#include "hcdn/model/checkpoint.hpp"
#include "hcdn/nn/adam.hpp"
#include "hcdn/objective/loss.hpp"
#include "hcdn/rng.hpp"
#include "hcdn/split.hpp"

namespace hcdn {

/// Experiment-driver knobs that are not part of the serialized recipe:
/// the blackout probes feed a black frame in place of one input, during
/// both training and the run's validation passes.
struct TrainOptions {
  bool blackout_good = false;
  bool blackout_poor = false;
};

struct RunRecord {
  std::filesystem::path run_dir;
  TrainConfig config;  // snapshot taken at run start
  std::vector<std::pair<long long, double>> loss_curve;
  std::vector<std::pair<long long, MetricsReport>> val_reports;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;  // best validation mIoU; final when never validated
  double best_val_miou = -1.0;
  double wall_seconds = 0.0;
};

namespace detail {

inline std::string zero_pad(long long v, int width = 6) {
  std::string s = std::to_string(v);
  return s.size() >= static_cast<std::size_t>(width)
             ? s
             : std::string(static_cast<std::size_t>(width) - s.size(), '0') + s;
}

inline std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace detail

/// The training loop: sample batch -> augment -> normalize -> forward ->
/// weighted BCE -> Adam step under cosine-annealed lr. Deterministic given
/// config + seed (single-threaded; the sampler, the augmentation draws, and
/// parameter init all derive from fixed streams).
///
/// Run directory layout: config.snapshot, loss.csv, metrics/*.json,
/// checkpoints/*.ckpt.
inline RunRecord train(const TrainConfig& cfg, const SplitAssignment& split,
                       const DatasetManifest& manifest, const std::filesystem::path& run_dir,
                       const TrainOptions& opts = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  std::filesystem::create_directories(run_dir / "metrics");
  std::filesystem::create_directories(run_dir / "checkpoints");
  save_train_config(cfg, run_dir / "config.snapshot");

  // The working set is cached in memory at the resize resolution; crops and
  // the rest of the augmentations are drawn per sample.
  const auto train_recs = select_records(manifest, split.train);
  std::vector<HousekeepingPair> pool;
  pool.reserve(train_recs.size());
  for (const auto& rec : train_recs) {
    try {
      HousekeepingPair p = load_pair(manifest, rec);
      p.poor = resize_image(p.poor, cfg.input_resize, cfg.input_resize);
      p.good = resize_image(p.good, cfg.input_resize, cfg.input_resize);
      p.mask = resize_mask(p.mask, cfg.input_resize, cfg.input_resize);
      pool.push_back(std::move(p));
    } catch (const Error& e) {
      raise(ErrorCode::DataLoadFailure, "train: cannot load pair '" + rec.pair_id + "': " + e.what());
    }
  }

  auto model = create_model<float>(cfg.model);
  nn::Adam<float> adam(model->parameters());

  std::ofstream loss_csv(run_dir / "loss.csv", std::ios::trunc);
  if (!loss_csv) raise(ErrorCode::IoError, "cannot write loss.csv under " + run_dir.string());
  loss_csv << "step,lr,loss\n";

  std::mt19937_64 order_rng(rng_derive(cfg.seed, 0));
  const std::uint64_t aug_stream = rng_derive(cfg.seed, 1);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();  // forces a shuffle before the first draw
  std::uint64_t sample_counter = 0;

  RunRecord run;
  run.run_dir = run_dir;
  run.config = cfg;

  const EvalOptions val_opts{cfg.input_resize, cfg.normalize, opts.blackout_good,
                             opts.blackout_poor};
  const auto validate_now = [&](long long step) {
    if (split.val.empty()) return;
    const MetricsReport report = evaluate_model(*model, manifest, split.val, val_opts);
    save_metrics_report(run_dir / "metrics" / ("step_" + detail::zero_pad(step) + ".json"),
                        report);
    run.val_reports.emplace_back(step, report);
    if (report.m_iou > run.best_val_miou) {
      run.best_val_miou = report.m_iou;
      run.best_checkpoint = run_dir / "checkpoints" / "best.ckpt";
      save_checkpoint(run.best_checkpoint, *model);
    }
  };

  for (long long step = 1; step <= cfg.total_steps; ++step) {
    std::vector<nn::TensorPtr<float>> logits;
    std::vector<BinaryMask> masks;
    std::vector<std::string> batch_ids;
    logits.reserve(cfg.batch_size);
    masks.reserve(cfg.batch_size);

    nn::TensorPtr<float> loss;
    try {
      for (int b = 0; b < cfg.batch_size; ++b) {
        if (cursor >= order.size()) {
          rng_shuffle(order_rng, order);
          cursor = 0;
        }
        const HousekeepingPair& base = pool[order[cursor++]];
        batch_ids.push_back(base.pair_id);
        HousekeepingPair s = augment_pair(base, cfg.augment, rng_derive(aug_stream, sample_counter++));
        NormalizedPair np{normalize_image(s.poor, cfg.normalize),
                          normalize_image(s.good, cfg.normalize)};
        if (opts.blackout_good) blackout_good(np, cfg.normalize);
        if (opts.blackout_poor) blackout_poor(np, cfg.normalize);
        masks.push_back(std::move(s.mask));
        logits.push_back(model->forward_logits(np.poor, np.good));
      }
      std::vector<const BinaryMask*> targets;
      for (const auto& m : masks) targets.push_back(&m);
      loss = weighted_cross_entropy_batch(logits, targets, cfg.loss);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteActivation) throw;
      raise(ErrorCode::NonFiniteLoss, "train: aborted at step " + std::to_string(step) +
                                          " (batch pairs: " + detail::join_ids(batch_ids) +
                                          "); " + e.what());
    }

    const double loss_value = static_cast<double>(loss->value[0]);
    // The abort happens before the optimizer step, so no checkpoint is ever
    // written from parameters that produced a non-finite loss.
    if (!std::isfinite(loss_value))
      raise(ErrorCode::NonFiniteLoss, "train: non-finite loss at step " + std::to_string(step) +
                                          " (batch pairs: " + detail::join_ids(batch_ids) + ")");

    adam.zero_grad();
    nn::backward(loss);
    const double lr_t = nn::cosine_lr(step - 1, cfg.scheduler_steps, cfg.lr, cfg.lr_min);
    adam.step(lr_t);

    loss_csv << step << ',' << detail::format_double(lr_t) << ','
             << detail::format_double(loss_value) << "\n";
    run.loss_curve.emplace_back(step, loss_value);

    if (step % cfg.checkpoint_every == 0 && step != cfg.total_steps)
      save_checkpoint(run_dir / "checkpoints" / ("step_" + detail::zero_pad(step) + ".ckpt"),
                      *model);
    if (step % cfg.eval_every == 0 && step != cfg.total_steps) validate_now(step);
  }

  run.final_checkpoint = run_dir / "checkpoints" / "final.ckpt";
  save_checkpoint(run.final_checkpoint, *model);
  validate_now(cfg.total_steps);
  if (run.best_checkpoint.empty()) run.best_checkpoint = run.final_checkpoint;

  loss_csv.flush();
  if (!loss_csv) raise(ErrorCode::IoError, "failed writing loss.csv under " + run_dir.string());

  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace hcdn
