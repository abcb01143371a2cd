#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "hcdn/config/toml.hpp"
#include "hcdn/harness/config.hpp"
#include "hcdn/harness/evaluate.hpp"
#include "hcdn/harness/experiments.hpp"
#include "hcdn/harness/trainer.hpp"
#include "hcdn/manifest.hpp"
#include "hcdn/split.hpp"
#include "harness_testutil.hpp"
#include "testutil.hpp"

using Catch::Approx;
using testutil::TempDir;

namespace {

hcdn::DatasetManifest quarter_change_manifest(const TempDir& dir, int n_pairs = 2) {
  for (int i = 0; i < n_pairs; ++i) {
    const auto poor = testutil::textured_image(32, 32, 100 + i);
    const auto good = testutil::textured_image(32, 32, 200 + i);
    const auto mask = testutil::rect_mask(32, 32, 8, 8, 16, 16);  // exactly 25% change
    testutil::write_pair_dir(dir.path(), "pair_" + std::to_string(i), poor, good, mask);
  }
  return hcdn::scan_dataset_dir(dir.path());
}

}  // namespace

TEST_CASE("toml subset parses and serializes", "[harness]") {
  const std::string text =
      "# run recipe\n"
      "top = 1\n"
      "\n"
      "[train]\n"
      "lr = 3e-4  # inline comment\n"
      "batch_size = 8\n"
      "resume = false\n"
      "note = \"line one\\nwith \\\"quotes\\\" and #hash\"\n"
      "\n"
      "[normalize]\n"
      "mean = [122.8, 116.7, 104.1]\n"
      "counts = [1, 2, 3]\n";
  const auto doc = hcdn::TomlDoc::parse(text);

  CHECK(doc.get_int("top") == 1);
  CHECK(doc.get_double("train.lr") == Approx(3e-4));
  CHECK(doc.get_int("train.batch_size") == 8);
  CHECK(doc.get_double("train.batch_size") == 8.0);  // int widens to float
  CHECK_FALSE(doc.get_bool("train.resume"));
  CHECK(doc.get_string("train.note") == "line one\nwith \"quotes\" and #hash");
  CHECK(doc.get_double_array("normalize.mean") ==
        std::vector<double>{122.8, 116.7, 104.1});
  CHECK(doc.get_int_array("normalize.counts") == std::vector<int>{1, 2, 3});
  CHECK_FALSE(doc.contains("train.missing"));

  SECTION("serialize -> parse -> serialize is a fixed point") {
    const std::string once = doc.serialize();
    const auto reparsed = hcdn::TomlDoc::parse(once);
    CHECK(reparsed == doc);
    CHECK(reparsed.serialize() == once);
  }

  SECTION("floats keep their exact value through a round trip") {
    hcdn::TomlDoc d;
    d.set("a.x", 0.1 + 0.2);
    d.set("a.y", 3e-4);
    d.set("a.z", 1024.0);
    const auto back = hcdn::TomlDoc::parse(d.serialize());
    CHECK(back.get_double("a.x") == 0.1 + 0.2);
    CHECK(back.get_double("a.y") == 3e-4);
    CHECK(back.at("a.z").kind() == hcdn::TomlValue::Kind::Float);
    CHECK(back.get_double("a.z") == 1024.0);
  }
}

TEST_CASE("toml subset rejects malformed input", "[harness]") {
  using hcdn::TomlDoc;
  CHECK_THROWS_AS(TomlDoc::parse("key\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse("key =\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse("[section\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse("a = 1\na = 2\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse("a = [1, 2\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse("a = \"bad \\q escape\"\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse("a = maybe\n"), hcdn::Error);
  CHECK_THROWS_AS(TomlDoc::parse_file("/nonexistent/config.toml"), hcdn::Error);
}

TEST_CASE("train config defaults echo the recipe", "[harness]") {
  const hcdn::TrainConfig cfg;
  CHECK(cfg.lr == 3e-4);
  CHECK(cfg.batch_size == 8);
  CHECK(cfg.total_steps == 100000);
  CHECK(cfg.scheduler_steps == 40000);
  CHECK(cfg.input_resize == 1024);
  CHECK(cfg.loss.positive_weight == 0.3);
  CHECK(cfg.crop_size() == 256);
  CHECK(cfg.augment.rotate_range_deg == 180.0);
  CHECK(cfg.augment.rotate_prob == 0.5);
  CHECK(cfg.augment.hflip_prob == 0.5);
  CHECK(cfg.augment.vflip_prob == 0.5);
  CHECK(cfg.normalize.mean == std::array<double, 3>{122.8, 116.7, 104.1});
  CHECK(cfg.normalize.stddev == std::array<double, 3>{68.5, 66.6, 70.3});
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("train config round trips through toml", "[harness]") {
  TempDir dir;
  hcdn::TrainConfig cfg = testutil::overfit_config();
  cfg.lr = 2.5e-4;
  cfg.seed = 1234;
  cfg.model.hv_mode = "hk";
  cfg.augment.photometric.hue_delta_deg = 7.5;

  const auto file = dir.path() / "run.toml";
  hcdn::save_train_config(cfg, file);
  const auto loaded = hcdn::load_train_config(file);
  CHECK(hcdn::train_config_to_toml(loaded).serialize() ==
        hcdn::train_config_to_toml(cfg).serialize());
  CHECK(loaded.model == cfg.model);

  SECTION("missing keys fall back to defaults") {
    const auto sparse = hcdn::train_config_from_toml(
        hcdn::TomlDoc::parse("[train]\nbatch_size = 4\n"));
    CHECK(sparse.batch_size == 4);
    CHECK(sparse.lr == 3e-4);
    CHECK(sparse.model == hcdn::ModelConfig{});
  }

  SECTION("unknown keys are rejected") {
    CHECK_THROWS_AS(
        hcdn::train_config_from_toml(hcdn::TomlDoc::parse("[train]\nbatchsize = 4\n")),
        hcdn::Error);
    CHECK_THROWS_AS(
        hcdn::train_config_from_toml(hcdn::TomlDoc::parse("[trainer]\nlr = 0.1\n")),
        hcdn::Error);
  }

  SECTION("invalid values fail validation") {
    auto bad = testutil::overfit_config();
    bad.batch_size = 0;
    CHECK_THROWS_AS(hcdn::train_config_from_toml(hcdn::train_config_to_toml(bad)), hcdn::Error);
    bad = testutil::overfit_config();
    bad.total_steps = 0;
    CHECK_THROWS_AS(bad.validate(), hcdn::Error);
    bad = testutil::overfit_config();
    bad.augment.crop_enabled = true;
    bad.augment.crop_size = bad.input_resize * 2;
    CHECK_THROWS_AS(bad.validate(), hcdn::Error);
    bad = testutil::overfit_config();
    bad.input_resize = 60;  // not divisible by stride 8 / patch 16
    CHECK_THROWS_AS(bad.validate(), hcdn::Error);
  }
}

TEST_CASE("evaluate pools a global confusion over the split", "[harness]") {
  TempDir dir;
  const auto manifest = quarter_change_manifest(dir);
  std::vector<std::string> ids;
  for (const auto& rec : manifest.records) ids.push_back(rec.pair_id);

  SECTION("ground-truth stub scores 1.0 everywhere") {
    const auto report = hcdn::evaluate_pairs(
        manifest, ids, [](const hcdn::HousekeepingPair& p) { return p.mask; }, 32);
    CHECK(report.aacc == 1.0);
    CHECK(report.m_fscore == 1.0);
    CHECK(report.m_iou == 1.0);
    CHECK(report.change.f1 == 1.0);
    CHECK(report.nochange.f1 == 1.0);
  }

  SECTION("all-zeros stub on a 25%-change split") {
    const auto report = hcdn::evaluate_pairs(
        manifest, ids,
        [](const hcdn::HousekeepingPair& p) {
          return hcdn::BinaryMask(p.mask.height, p.mask.width);
        },
        32);
    CHECK(report.aacc == 0.75);
    CHECK(report.change.recall == 0.0);
    CHECK(report.change.precision == 0.0);
    CHECK(report.zero_division);
  }

  SECTION("scoring happens at the eval resolution") {
    const auto report = hcdn::evaluate_pairs(
        manifest, ids, [](const hcdn::HousekeepingPair& p) { return p.mask; }, 64);
    CHECK(report.aacc == 1.0);  // prediction and target resized consistently
  }

  SECTION("empty split raises") {
    CHECK_THROWS_AS(hcdn::evaluate_pairs(
                        manifest, {},
                        [](const hcdn::HousekeepingPair& p) { return p.mask; }, 32),
                    hcdn::Error);
  }

  SECTION("repeated evaluation of one checkpoint is byte-identical") {
    const auto cfg = testutil::overfit_config(32);
    auto model = hcdn::create_model<float>(cfg.model);
    const auto ckpt = dir.path() / "model.ckpt";
    hcdn::save_checkpoint(ckpt, *model);

    hcdn::EvalOptions opts;
    opts.resize = 32;
    const auto a = dir.path() / "report_a.json";
    const auto b = dir.path() / "report_b.json";
    hcdn::save_metrics_report(a, hcdn::evaluate_checkpoint(ckpt, manifest, ids, opts));
    hcdn::save_metrics_report(b, hcdn::evaluate_checkpoint(ckpt, manifest, ids, opts));
    const auto bytes_a = testutil::read_file(a);
    CHECK(!bytes_a.empty());
    CHECK(bytes_a == testutil::read_file(b));
  }
}

TEST_CASE("training writes the run directory contract", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = hcdn::scan_dataset_dir(data.path());

  auto cfg = testutil::overfit_config(64, 6);
  cfg.checkpoint_every = 2;
  cfg.eval_every = 3;

  hcdn::SplitAssignment split;
  split.train = {"pair_00", "pair_01", "pair_02"};
  split.val = {"pair_03"};

  TempDir out;
  const auto run_dir = out.path() / "run";
  const auto run = hcdn::train(cfg, split, manifest, run_dir);

  CHECK(run.loss_curve.size() == 6);
  for (const auto& [step, value] : run.loss_curve) CHECK(std::isfinite(value));

  // config.snapshot round-trips to the exact recipe
  const auto snapshot = testutil::read_file(run_dir / "config.snapshot");
  CHECK(snapshot == hcdn::train_config_to_toml(cfg).serialize());
  CHECK(hcdn::train_config_to_toml(hcdn::load_train_config(run_dir / "config.snapshot"))
            .serialize() == snapshot);

  // loss.csv: header + one row per step
  std::ifstream csv(run_dir / "loss.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "step,lr,loss");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);

  CHECK(std::filesystem::exists(run_dir / "checkpoints" / "step_000002.ckpt"));
  CHECK(std::filesystem::exists(run_dir / "checkpoints" / "step_000004.ckpt"));
  CHECK(std::filesystem::exists(run.final_checkpoint));
  CHECK(run.final_checkpoint == run_dir / "checkpoints" / "final.ckpt");

  // eval ran at step 3 and at the end; best checkpoint tracked
  CHECK(std::filesystem::exists(run_dir / "metrics" / "step_000003.json"));
  CHECK(std::filesystem::exists(run_dir / "metrics" / "step_000006.json"));
  CHECK(run.val_reports.size() == 2);
  CHECK(std::filesystem::exists(run.best_checkpoint));
  CHECK(run.best_val_miou >= 0.0);
  CHECK(run.wall_seconds > 0.0);

  SECTION("checkpoints load back under the saved config") {
    hcdn::HcdnModel<float> model(cfg.model);
    CHECK_NOTHROW(hcdn::load_checkpoint(run.final_checkpoint, model));
  }
}

TEST_CASE("identical seeds reproduce the run exactly", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = hcdn::scan_dataset_dir(data.path());
  const auto split = testutil::all_train_split(manifest);
  const auto cfg = testutil::overfit_config(64, 8);

  TempDir out;
  const auto run_a = hcdn::train(cfg, split, manifest, out.path() / "a");
  const auto run_b = hcdn::train(cfg, split, manifest, out.path() / "b");

  REQUIRE(run_a.loss_curve.size() == run_b.loss_curve.size());
  for (std::size_t i = 0; i < run_a.loss_curve.size(); ++i) {
    CHECK(run_a.loss_curve[i].first == run_b.loss_curve[i].first);
    CHECK(run_a.loss_curve[i].second == run_b.loss_curve[i].second);  // exact
  }
  CHECK(testutil::read_file(out.path() / "a" / "loss.csv") ==
        testutil::read_file(out.path() / "b" / "loss.csv"));
  CHECK(testutil::read_file(run_a.final_checkpoint) ==
        testutil::read_file(run_b.final_checkpoint));
}

TEST_CASE("training surfaces data problems as DataLoadFailure", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  auto manifest = hcdn::scan_dataset_dir(data.path());
  std::filesystem::remove(data.path() / "pair_01" / "good.png");

  const auto cfg = testutil::overfit_config(64, 2);
  const auto split = testutil::all_train_split(manifest);
  TempDir out;
  try {
    hcdn::train(cfg, split, manifest, out.path() / "run");
    FAIL("expected DataLoadFailure");
  } catch (const hcdn::Error& e) {
    CHECK(e.code() == hcdn::ErrorCode::DataLoadFailure);
    CHECK(std::string(e.what()).find("pair_01") != std::string::npos);
  }
}

TEST_CASE("non-finite loss aborts before the next optimizer step", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = hcdn::scan_dataset_dir(data.path());
  const auto split = testutil::all_train_split(manifest);

  auto cfg = testutil::overfit_config(64, 50);
  cfg.lr = 1e20;  // drives attention scores past float range within a few steps

  TempDir out;
  const auto run_dir = out.path() / "run";
  try {
    hcdn::train(cfg, split, manifest, run_dir);
    FAIL("expected NonFiniteLoss");
  } catch (const hcdn::Error& e) {
    CHECK(e.code() == hcdn::ErrorCode::NonFiniteLoss);
    CHECK(std::string(e.what()).find("batch pairs:") != std::string::npos);
    CHECK(std::string(e.what()).find("pair_") != std::string::npos);
  }
  // the aborted run never persisted parameters
  CHECK_FALSE(std::filesystem::exists(run_dir / "checkpoints" / "final.ckpt"));
  CHECK_FALSE(std::filesystem::exists(run_dir / "checkpoints" / "best.ckpt"));
}

TEST_CASE("ablation emits the paired rows and delta", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = hcdn::scan_dataset_dir(data.path());
  const auto split = hcdn::split_dataset(manifest, 5);
  const auto cfg = testutil::overfit_config(64, 4);

  TempDir out;
  const auto result = hcdn::run_ablation(cfg, split, manifest, out.path());

  CHECK(std::filesystem::exists(out.path() / "with_all" / "checkpoints" / "final.ckpt"));
  CHECK(std::filesystem::exists(out.path() / "without_good" / "checkpoints" / "final.ckpt"));
  CHECK(result.difference.mIoU ==
        Approx(result.with_all.mIoU - result.without_good.mIoU).margin(1e-12));

  std::ifstream in(out.path() / "ablation.json");
  const auto j = nlohmann::json::parse(in);
  REQUIRE(j.at("rows").size() == 3);
  CHECK(j["rows"][0]["label"] == "with all images");
  CHECK(j["rows"][1]["label"] == "without good images");
  CHECK(j["rows"][2]["label"] == "difference");
  for (const char* key : {"aACC", "mFscore", "mPrecision", "mRecall", "mIoU"})
    CHECK(j["rows"][0].contains(key));
}

TEST_CASE("segmentation mode covers the three input conditions", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = hcdn::scan_dataset_dir(data.path());
  const auto cfg = testutil::overfit_config(64, 4);

  TempDir out;
  const auto result = hcdn::run_segmentation_mode(cfg, manifest, out.path());

  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[0].first == "without poor images");
  CHECK(result.rows[1].first == "without good images");
  CHECK(result.rows[2].first == "with all images");
  for (const char* slug : {"without_poor", "without_good", "with_all"})
    CHECK(std::filesystem::exists(out.path() / slug / "checkpoints" / "final.ckpt"));

  std::ifstream in(out.path() / "segmode.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("rows").size() == 3);
}

TEST_CASE("blacking out both inputs degenerates to a fixed mask", "[harness]") {
  TempDir data;
  testutil::write_overfit_fixture(data.path());
  const auto manifest = hcdn::scan_dataset_dir(data.path());
  const auto split = testutil::all_train_split(manifest);

  auto cfg = testutil::overfit_config(64, 60);
  hcdn::TrainOptions both;
  both.blackout_good = true;
  both.blackout_poor = true;

  TempDir out;
  const auto run = hcdn::train(cfg, split, manifest, out.path() / "run", both);

  hcdn::EvalOptions opts{cfg.input_resize, cfg.normalize, true, true};
  auto model = hcdn::create_model<float>(hcdn::peek_checkpoint_config(run.best_checkpoint));
  hcdn::load_checkpoint(run.best_checkpoint, *model);
  const auto predict = hcdn::make_model_predictor(*model, opts);

  // The inputs are constant, so every pair gets one and the same mask.
  const auto first = predict(hcdn::load_pair(manifest, manifest.records[0]));
  for (std::size_t i = 1; i < manifest.records.size(); ++i)
    CHECK(predict(hcdn::load_pair(manifest, manifest.records[i])).values == first.values);

  // Any pair-independent mask F obeys |F^M1|+|F^M2| >= |M1^M2| (symmetric
  // differences), so pooled errors >= 1408 + 1088 = 2496 of 16384 pixels on
  // this fixture, capping aACC at ~0.848 -- well below the informed regime.
  const auto report =
      hcdn::evaluate_checkpoint(run.best_checkpoint, manifest, split.train, opts);
  CHECK(report.aacc <= 1.0 - 2496.0 / 16384.0 + 1e-9);
}
