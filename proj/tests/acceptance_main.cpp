// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Usage: hcdn_acceptance [path/to/configs/paper.toml]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hcdn/harness/config.hpp"
#include "hcdn/harness/evaluate.hpp"
#include "hcdn/harness/experiments.hpp"
#include "hcdn/harness/trainer.hpp"
#include "hcdn/manifest.hpp"
#include "hcdn/metrics/metrics.hpp"
#include "hcdn/model/ffm.hpp"
#include "hcdn/model/hcdn.hpp"
#include "hcdn/monitor/monitor.hpp"
#include "hcdn/objective/loss.hpp"
#include "hcdn/prep/driver.hpp"
#include "hcdn/prep/gate.hpp"
#include "hcdn/split.hpp"
#include "harness_testutil.hpp"
#include "nn_testutil.hpp"
#include "testutil.hpp"

using namespace hcdn;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

int g_failures = 0;

template <typename Fn>
void criterion(int num, const char* name, double budget_seconds, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string error;
  try {
    body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (error.empty() && budget_seconds > 0.0 && elapsed >= budget_seconds)
    error = "ran " + fmt(elapsed) + "s, budget " + fmt(budget_seconds) + "s";
  if (error.empty()) {
    std::printf("criterion %d PASS  %s  (%.1fs)\n", num, name, elapsed);
  } else {
    std::printf("criterion %d FAIL  %s  (%.1fs) -- %s\n", num, name, elapsed,
                error.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

RigidTransform rotation_about_center(double deg, int h, int w) {
  RigidTransform t;
  t.theta = deg * kPi / 180.0;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double c = std::cos(t.theta), s = std::sin(t.theta);
  t.tx = cx - (c * cx - s * cy);
  t.ty = cy - (s * cx + c * cy);
  return t;
}

// poor and good cut from one canvas so that good->poor is exactly (dx, dy),
// with both crops fully textured.
HousekeepingPair translated_pair(int h, int w, int dx, int dy, std::uint64_t seed,
                                 const std::string& id) {
  const int margin = std::max(std::abs(dx), std::abs(dy)) + 16;
  const ImageBuffer canvas = testutil::textured_image(h + 2 * margin, w + 2 * margin, seed);
  HousekeepingPair pair;
  pair.pair_id = id;
  ImageBuffer poor(h, w), good(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        poor.at(y, x, c) = canvas.at(y + margin, x + margin, c);
        good.at(y, x, c) = canvas.at(y + margin + dy, x + margin + dx, c);
      }
  pair.poor = std::move(poor);
  pair.good = std::move(good);
  pair.mask = BinaryMask(h, w);
  return pair;
}

std::vector<std::pair<std::string, std::string>> tree_bytes(
    const std::filesystem::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out.emplace_back(std::filesystem::relative(entry.path(), root).string(),
                       testutil::read_file(entry.path()));
  std::sort(out.begin(), out.end());
  return out;
}

ModelConfig toy_model_config() {
  ModelConfig c;
  c.input_size = 32;
  c.stage_count = 2;
  c.embed_dims = {8, 8};
  c.num_heads = {2, 2};
  c.depths = {1, 1};
  c.sr_ratios = {2, 1};
  c.mlp_ratio = 2;
  c.decoder_dim = 8;
  c.vit_width = 8;
  c.vit_depth = 2;
  c.vit_heads = 2;
  c.vit_patch = 8;
  return c;
}

FloatImage random_input(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FloatImage img(3, h, w);
  for (auto& v : img.data) v = static_cast<float>(rng_normal(rng));
  return img;
}

template <typename T>
std::vector<nn::TensorPtr<T>> trainable_params(const nn::Module<T>& m) {
  std::vector<nn::TensorPtr<T>> out;
  for (auto& [name, p] : m.named_parameters())
    if (p->requires_grad) out.push_back(p);
  return out;
}

hcdn::FramePredictor level_predictor() {
  return [](const ImageBuffer& frame) {
    double sum = 0.0;
    for (auto v : frame.pixels) sum += v;
    const double level = sum / (255.0 * static_cast<double>(frame.pixels.size()));
    BinaryMask mask(frame.height, frame.width);
    const auto ones =
        static_cast<std::size_t>(level * static_cast<double>(mask.values.size()));
    std::fill(mask.values.begin(), mask.values.begin() + static_cast<long>(ones), 1);
    return mask;
  };
}

// --- criterion bodies ------------------------------------------------------

void metric_oracle() {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    BinaryMask pred(16, 16), targ(16, 16);
    const double dp = static_cast<double>(rng_below(rng, 12)) / 11.0;
    const double dt = static_cast<double>(rng_below(rng, 12)) / 11.0;
    for (auto& v : pred.values) v = rng_uniform(rng, 0.0, 1.0) < dp ? 1 : 0;
    for (auto& v : targ.values) v = rng_uniform(rng, 0.0, 1.0) < dt ? 1 : 0;

    // independent brute-force confusion
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const bool p = pred.at(y, x) != 0, t = targ.at(y, x) != 0;
        if (p && t) ++tp;
        if (p && !t) ++fp;
        if (!p && t) ++fn;
        if (!p && !t) ++tn;
      }
    const auto counts = accumulate_confusion(pred, targ);
    check(counts.tp == tp && counts.fp == fp && counts.fn == fn && counts.tn == tn,
          "confusion counts differ from pixel loop");

    const auto brute = [](long long btp, long long bfp, long long bfn, long long btn) {
      auto ratio = [](long long num, long long den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
      };
      ClassMetrics m;
      m.precision = ratio(btp, btp + bfp);
      m.recall = ratio(btp, btp + bfn);
      m.f1 = m.precision + m.recall > 0.0
                 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                 : 0.0;
      m.iou = ratio(btp, btp + bfp + bfn);
      m.acc = static_cast<double>(btp + btn) / static_cast<double>(btp + bfp + bfn + btn);
      return m;
    };
    const ClassMetrics ref_c = brute(tp, fp, fn, tn);
    const ClassMetrics ref_n = brute(tn, fn, fp, tp);
    const ClassMetrics got_c = compute_metrics(counts);
    const ClassMetrics got_n = compute_metrics(swap_classes(counts));
    for (const auto& [got, ref] : {std::pair{got_c, ref_c}, std::pair{got_n, ref_n}}) {
      check(std::abs(got.precision - ref.precision) <= 1e-12, "precision drift");
      check(std::abs(got.recall - ref.recall) <= 1e-12, "recall drift");
      check(std::abs(got.f1 - ref.f1) <= 1e-12, "f1 drift");
      check(std::abs(got.iou - ref.iou) <= 1e-12, "iou drift");
      check(std::abs(got.acc - ref.acc) <= 1e-12, "acc drift");
      check(std::abs(got.f1 - 2.0 * got.iou / (1.0 + got.iou)) <= 1e-12,
            "F1 = 2*IoU/(1+IoU) identity broken");
    }
    const auto report = full_report(counts);
    check(std::abs(report.m_iou - (ref_c.iou + ref_n.iou) / 2.0) <= 1e-12 &&
              std::abs(report.m_fscore - (ref_c.f1 + ref_n.f1) / 2.0) <= 1e-12,
          "two-class means drift");
  }
}

void gradient_checks() {
  std::mt19937_64 rng(42);

  {  // (a) ffm fuse at width 8
    FeatureFusion<double> ffm(8, 2, true, rng);
    nn::randomize_parameters(ffm, rng, 0.3);
    FeatureFusion<float> twin(8, 2, true, rng);
    testutil::copy_parameters(ffm, twin);

    auto h_c = testutil::random_leaf<double>({16, 8}, rng);
    auto h_f = testutil::random_leaf<double>({16, 8}, rng);
    auto h_cf = testutil::float_twin(h_c);
    auto h_ff = testutil::float_twin(h_f);
    const auto w = testutil::readout_weights(16 * 8, rng);

    std::vector<nn::TensorPtr<double>> leaves{h_c, h_f};
    std::vector<nn::TensorPtr<float>> leaves_f{h_cf, h_ff};
    for (auto& p : trainable_params(ffm)) leaves.push_back(p);
    for (auto& p : trainable_params(twin)) leaves_f.push_back(p);

    const auto g = testutil::dual_module_gradcheck(
        [&] { return testutil::readout(ffm.fuse(h_c, h_f, 4, 4).h_t, w); },
        [&] { return testutil::readout(twin.fuse(h_cf, h_ff, 4, 4).h_t, w); }, leaves,
        leaves_f, rng, 60);
    check(g.rel64 < 1e-5, "ffm 64-bit rel error " + fmt(g.rel64));
    check(g.rel32 < 1e-3, "ffm float rel error " + fmt(g.rel32));
  }

  {  // (b) forward + weighted cross entropy on the width-8 two-stage toy
    HcdnModel<double> model(toy_model_config());
    nn::randomize_parameters(model, rng, 0.15);
    HcdnModel<float> twin(toy_model_config());
    testutil::copy_parameters(model, twin);

    const auto poor = random_input(32, 32, 12);
    const auto good = random_input(32, 32, 13);
    const auto mask = testutil::rect_mask(32, 32, 8, 8, 12, 16);
    auto params = trainable_params(model);
    auto params_f = trainable_params(twin);
    check(params.size() >= 50, "toy model exposes too few parameters");

    const auto g = testutil::dual_module_gradcheck(
        [&] {
          return weighted_cross_entropy(model.forward_logits(poor, good), mask,
                                        LossConfig{});
        },
        [&] {
          return weighted_cross_entropy(twin.forward_logits(poor, good), mask,
                                        LossConfig{});
        },
        params, params_f, rng, 50);
    check(g.rel64 < 1e-5, "model+loss 64-bit rel error " + fmt(g.rel64));
    check(g.rel32 < 1e-3, "model+loss float rel error " + fmt(g.rel32));
  }
}

void ffm_reduction() {
  std::mt19937_64 rng(43);
  for (int draw = 0; draw < 3; ++draw) {
    FeatureFusion<double> ffm(8, 2, true, rng);  // conv blocks + out proj zero-init
    auto h_c = testutil::random_leaf<double>({16, 8}, rng);
    auto h_f = testutil::random_leaf<double>({16, 8}, rng);
    const auto out = ffm.fuse(h_c, h_f, 4, 4);
    for (std::size_t i = 0; i < out.h_t->value.size(); ++i) {
      const double expected = (h_f->value[i] + h_c->value[i]) + h_f->value[i];
      check(out.h_t->value[i] == expected, "h_t != 2*h_f + h_c at 64-bit");
    }
  }
}

void loss_point_values() {
  const auto scalar_loss = [](double logit, int y, double w) {
    LossConfig cfg;
    cfg.positive_weight = w;
    BinaryMask mask(1, 1, static_cast<std::uint8_t>(y));
    const auto logits = nn::make_const<double>({1, 1, 1}, std::vector<double>{logit});
    return weighted_cross_entropy(logits, mask, cfg)->value[0];
  };
  check(std::abs(scalar_loss(0.0, 1, 0.3) - 0.2079) <= 1e-4,
        "(y=1, p=0.5, w=0.3) != 0.2079: got " + fmt(scalar_loss(0.0, 1, 0.3)));
  check(std::abs(scalar_loss(0.0, 1, 0.5) - 0.3466) <= 1e-4,
        "(y=1, p=0.5, w=0.5) != 0.3466");
  check(std::abs(scalar_loss(0.0, 0, 0.5) - 0.3466) <= 1e-4,
        "(y=0, p=0.5, w=0.5) != 0.3466");
  check(scalar_loss(40.0, 1, 0.3) <= 1e-6, "perfect positive prediction loss > 1e-6");
  check(scalar_loss(-40.0, 0, 0.3) <= 1e-6, "perfect negative prediction loss > 1e-6");
}

void alignment_recovery() {
  const int h = 512, w = 512;
  std::mt19937_64 rng(44);
  int successes = 0;
  const int trials = 20;
  for (int i = 0; i < trials; ++i) {
    const double theta_deg = rng_uniform(rng, -30.0, 30.0);
    const double mag = rng_uniform(rng, 0.0, 0.15 * std::min(h, w));
    const double dir = rng_uniform(rng, 0.0, 2.0 * kPi);
    RigidTransform t_true = rotation_about_center(theta_deg, h, w);
    t_true.tx += mag * std::cos(dir);
    t_true.ty += mag * std::sin(dir);

    HousekeepingPair pair;
    pair.pair_id = "trial" + std::to_string(i);
    pair.poor = testutil::textured_image(h, w, 500 + static_cast<std::uint64_t>(i));
    pair.good = warp_good_image(pair.poor, t_true.inverse(), h, w).image;
    pair.mask = BinaryMask(h, w);

    const GateReport report = gate_pair(pair);
    if (report.verdict != Verdict::GoodMatch) continue;
    const double dtheta = std::abs(report.transform.theta - t_true.theta) * 180.0 / kPi;
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const auto p_est = report.transform.apply(cx, cy);
    const auto p_true = t_true.apply(cx, cy);
    const double dcenter = std::hypot(p_est[0] - p_true[0], p_est[1] - p_true[1]);
    if (dtheta <= 0.5 && dcenter <= 1.0) ++successes;
  }
  check(successes >= 18, "recovered " + std::to_string(successes) + "/20 < 90%");

  // translation by a quarter of the width leaves blank_ratio exactly 0.25
  HousekeepingPair blanky = translated_pair(h, w, 128, 0, 999, "blanky");
  const GateReport report = gate_pair(blanky);
  check(report.verdict == Verdict::Rejected, "blank_ratio 0.25 pair not rejected");
  check(report.reason == RejectReason::ExcessBlank,
        "blank_ratio 0.25 pair rejected for the wrong reason");
  check(std::abs(report.blank_ratio - 0.25) <= 0.01,
        "engineered blank_ratio drifted: " + fmt(report.blank_ratio));
}

void overfit_sanity() {
  testutil::TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = scan_dataset_dir(data.path());
  const auto split = testutil::all_train_split(manifest);
  const auto cfg = testutil::overfit_config(64, 400);
  check(cfg.total_steps <= 500, "fixture budget exceeds 500 steps");

  testutil::TempDir out;
  const auto result = run_ablation(cfg, split, manifest, out.path());

  EvalOptions opts;
  opts.resize = cfg.input_resize;
  opts.normalize = cfg.normalize;
  const auto report = evaluate_checkpoint(result.run_all.best_checkpoint, manifest,
                                          split.train, opts);
  check(report.change.f1 >= 0.95,
        "train F1 " + fmt(report.change.f1) + " < 0.95 after " +
            std::to_string(cfg.total_steps) + " steps");
  check(std::abs(result.difference.mIoU) < 2.0,
        "|delta mIoU| " + fmt(std::abs(result.difference.mIoU)) + " >= 2 points");
}

void pipeline_determinism() {
  testutil::TempDir work;

  {  // prep twice
    const auto raw_root = work.path() / "raw";
    for (int i = 0; i < 3; ++i) {
      const auto pair = translated_pair(160, 160, 4 + i, 2,
                                        700 + static_cast<std::uint64_t>(i),
                                        "pair_" + std::to_string(i));
      testutil::write_pair_dir(raw_root, pair.pair_id, pair.poor, pair.good,
                               testutil::rect_mask(160, 160, 40, 40, 32, 32));
    }
    testutil::write_pair_dir(raw_root, "noise", testutil::noise_image(160, 160, 31),
                             testutil::noise_image(160, 160, 32), BinaryMask(160, 160));
    const auto raw = scan_dataset_dir(raw_root);
    const auto sum_a = run_prep(raw, work.path() / "prep_a");
    const auto sum_b = run_prep(raw, work.path() / "prep_b");
    check(sum_a.accepted == sum_b.accepted && sum_a.accepted >= 1,
          "prep accepted sets differ across invocations");
    check(tree_bytes(work.path() / "prep_a") == tree_bytes(work.path() / "prep_b"),
          "prep output trees are not byte-identical");
  }

  {  // seeded split twice
    DatasetManifest flat;
    for (int i = 0; i < 10; ++i) {
      PairRecord rec;
      rec.pair_id = "p" + std::to_string(i);
      flat.records.push_back(rec);
    }
    save_split(split_dataset(flat, 7), work.path() / "split_a.json");
    save_split(split_dataset(flat, 7), work.path() / "split_b.json");
    check(testutil::read_file(work.path() / "split_a.json") ==
              testutil::read_file(work.path() / "split_b.json"),
          "seeded split files differ");
  }

  {  // eval twice
    testutil::TempDir data;
    testutil::write_overfit_fixture(data.path());
    const auto manifest = scan_dataset_dir(data.path());
    std::vector<std::string> ids;
    for (const auto& rec : manifest.records) ids.push_back(rec.pair_id);

    const auto cfg = testutil::overfit_config(64);
    auto model = create_model<float>(cfg.model);
    const auto ckpt = work.path() / "model.ckpt";
    save_checkpoint(ckpt, *model);
    EvalOptions opts;
    opts.resize = 64;
    save_metrics_report(work.path() / "eval_a.json",
                        evaluate_checkpoint(ckpt, manifest, ids, opts));
    save_metrics_report(work.path() / "eval_b.json",
                        evaluate_checkpoint(ckpt, manifest, ids, opts));
    check(testutil::read_file(work.path() / "eval_a.json") ==
              testutil::read_file(work.path() / "eval_b.json"),
          "eval reports differ across invocations");
  }
}

void config_fidelity(const std::filesystem::path& paper_toml) {
  check(std::filesystem::exists(paper_toml), "missing " + paper_toml.string());
  const auto raw = testutil::read_file(paper_toml);
  const auto cfg = load_train_config(paper_toml);
  check(train_config_to_toml(cfg).serialize() == raw,
        "paper.toml does not round-trip byte-identically");

  check(cfg.lr == 3e-4, "lr != 3e-4");
  check(cfg.batch_size == 8, "batch_size != 8");
  check(cfg.loss.positive_weight == 0.3, "loss weight != 0.3");
  check(cfg.augment.crop_enabled && cfg.augment.crop_size == 256, "crop != 256");
  check(cfg.input_resize == 1024, "resize != 1024");
  check(cfg.augment.rotate_enabled && cfg.augment.rotate_range_deg == 180.0 &&
            cfg.augment.rotate_prob == 0.5,
        "rotation != ±180 @ 0.5");
  check(cfg.augment.hflip_enabled && cfg.augment.hflip_prob == 0.5 &&
            cfg.augment.vflip_enabled && cfg.augment.vflip_prob == 0.5,
        "flips != @ 0.5");
  check(cfg.normalize.mean == std::array<double, 3>{122.8, 116.7, 104.1},
        "mean != [122.8, 116.7, 104.1]");
  check(cfg.normalize.stddev == std::array<double, 3>{68.5, 66.6, 70.3},
        "std != [68.5, 66.6, 70.3]");
}

void monitor_contract() {
  std::vector<Frame> frames;
  for (int i = 0; i < 6; ++i) {
    Frame f;
    f.frame_id = i;
    f.origin = "synthetic#" + std::to_string(i);
    f.image = testutil::constant_image(16, 16, static_cast<std::uint8_t>(51 * i));
    frames.push_back(std::move(f));
  }

  {  // refusing sink: every frame still processed, failures logged
    MemorySink sink;
    sink.refuse = true;
    const auto records = detect_and_alert(frames, level_predictor(), 0.0, sink);
    check(records.size() == frames.size(), "refusing sink dropped frames");
    for (std::size_t i = 0; i < records.size(); ++i) {
      check(records[i].frame_id == frames[i].frame_id, "record order broken");
      check(records[i].alerted && !records[i].delivered && !records[i].detail.empty(),
            "failed delivery not logged");
    }
    check(sink.delivered.empty(), "refusing sink accepted a payload");
  }

  {  // alert emission monotone across three thresholds
    std::vector<std::size_t> counts;
    for (const double threshold : {0.05, 0.45, 0.90}) {
      MemorySink sink;
      const auto records = detect_and_alert(frames, level_predictor(), threshold, sink);
      std::size_t alerted = 0;
      for (const auto& rec : records) alerted += rec.alerted ? 1 : 0;
      check(alerted == sink.delivered.size(), "alert/delivery count mismatch");
      counts.push_back(alerted);
    }
    check(counts[0] >= counts[1] && counts[1] >= counts[2],
          "alert count not monotone in threshold");
    check(counts[0] > counts[2], "threshold ladder failed to separate");
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path paper_toml =
      argc > 1 ? std::filesystem::path(argv[1]) : "configs/paper.toml";

  criterion(1, "metric oracle equivalence", 10.0, metric_oracle);
  criterion(2, "gradient checks", 60.0, gradient_checks);
  criterion(3, "ffm algebraic reduction", 5.0, ffm_reduction);
  criterion(4, "loss point values", 0.0, loss_point_values);
  criterion(5, "alignment recovery", 120.0, alignment_recovery);
  criterion(6, "overfit sanity", 600.0, overfit_sanity);
  criterion(7, "pipeline determinism", 0.0, pipeline_determinism);
  criterion(8, "config fidelity", 0.0, [&] { config_fidelity(paper_toml); });
  criterion(9, "monitor contract", 0.0, monitor_contract);

  if (g_failures > 0) {
    std::printf("%d of 9 criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
