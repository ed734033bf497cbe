#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "cropforge/crop_layers.hpp"
#include "cropforge/errors.hpp"
#include "cropforge/losses.hpp"
#include "cropforge/training.hpp"

using namespace cropforge;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.target_side = 32;
  cfg.depth = 2;
  cfg.base_channels = 2;
  cfg.input_channels = 1;
  cfg.roi_grid = 2;
  cfg.fc1 = 16;
  cfg.fc2 = 8;
  cfg.seed = 2025;
  cfg.schedule.stages[0] = {1e-4, 1, true, false};
  cfg.schedule.stages[1] = {1e-4, 1, false, true};
  cfg.schedule.stages[2] = {1e-5, 1, true, true};
  return cfg;
}

std::uint64_t group_checksum(const ModelParams& params, ParamGroup group) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const auto& name : params.names()) {
    if (params.group_of(name) != group) continue;
    for (double v : params.at(name).value().values()) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof(bits));
      hash ^= bits;
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

}  // namespace

TEST_CASE("config serialization round-trips") {
  RunConfig cfg = tiny_config();
  cfg.sigma = 0.05;
  cfg.gamma = 2.5;
  cfg.gt_mode = "full-image";
  cfg.teacher_force_saliency = true;

  std::istringstream is(cfg.serialize());
  const RunConfig back = RunConfig::parse(is);
  CHECK(back == cfg);

  std::istringstream bad("no_such_key = 1\n");
  CHECK_THROWS_AS(RunConfig::parse(bad), ParamError);
  std::istringstream badmode("gt_mode = whatever\n");
  CHECK_THROWS_AS(RunConfig::parse(badmode), ParamError);
}

TEST_CASE("config defaults sit at the documented operating point") {
  const RunConfig cfg;
  CHECK(cfg.sigma == 0.01);
  CHECK(cfg.gamma == 3.0);
  CHECK(cfg.lambda == 1.0);
  CHECK(cfg.target_side == 224);
  CHECK(cfg.fallback_fraction == 0.70);
  CHECK(cfg.schedule.stages[0].lr == 1e-4);
  CHECK(cfg.schedule.stages[0].epochs == 4);
  CHECK(cfg.schedule.stages[1].lr == 1e-4);
  CHECK(cfg.schedule.stages[1].epochs == 6);
  CHECK(!cfg.schedule.stages[1].train_saliency);
  CHECK(cfg.schedule.stages[2].lr == 1e-5);
  CHECK(cfg.schedule.stages[2].epochs == 2);
}

TEST_CASE("training is deterministic and stage 2 never touches saliency weights") {
  const RunConfig cfg = tiny_config();
  const auto data = generate_synthetic(6, 32, cfg.seed);

  CropModel a = CropModel::create(cfg.model_config());
  CropModel b = CropModel::create(cfg.model_config());
  const TrainLog la = train(a, data, cfg);
  const TrainLog lb = train(b, data, cfg);

  REQUIRE(la.rows.size() == 3);
  for (const auto& name : a.params.names()) {
    CHECK(a.params.at(name).value().values() == b.params.at(name).value().values());
  }
  REQUIRE(la.rows.size() == lb.rows.size());
  for (std::size_t i = 0; i < la.rows.size(); ++i) {
    CHECK(la.rows[i].mean_saliency == lb.rows[i].mean_saliency);
    CHECK(la.rows[i].mean_offset == lb.rows[i].mean_offset);
  }

  // Stage 2 alone must leave the saliency group bit-identical.
  CropModel c = CropModel::create(cfg.model_config());
  const std::uint64_t before = group_checksum(c.params, ParamGroup::kSaliency);
  const std::uint64_t head_before = group_checksum(c.params, ParamGroup::kRegression);
  train(c, data, cfg, {2});
  CHECK(group_checksum(c.params, ParamGroup::kSaliency) == before);
  CHECK(group_checksum(c.params, ParamGroup::kRegression) != head_before);
}

TEST_CASE("zero learning rates leave parameters unchanged and losses flat") {
  RunConfig cfg = tiny_config();
  cfg.schedule.stages[0] = {0.0, 2, true, false};
  cfg.schedule.stages[1] = {0.0, 2, false, true};
  cfg.schedule.stages[2] = {0.0, 1, true, true};
  const auto data = generate_synthetic(4, 32, 3);

  CropModel model = CropModel::create(cfg.model_config());
  CropModel reference = CropModel::create(cfg.model_config());
  const TrainLog log = train(model, data, cfg);

  for (const auto& name : model.params.names()) {
    CHECK(model.params.at(name).value().values() == reference.params.at(name).value().values());
  }
  // Same parameters every epoch => identical epoch means within each stage.
  CHECK(log.rows[0].mean_saliency == log.rows[1].mean_saliency);
  CHECK(log.rows[2].mean_offset == log.rows[3].mean_offset);
}

TEST_CASE("loss log rows follow the schedule and serialize to CSV") {
  RunConfig cfg = tiny_config();
  const auto data = generate_synthetic(3, 32, 9);
  CropModel model = CropModel::create(cfg.model_config());
  const TrainLog log = train(model, data, cfg);

  REQUIRE(log.rows.size() == 3);
  CHECK(log.rows[0].stage == 1);
  CHECK(log.rows[1].stage == 2);
  CHECK(log.rows[2].stage == 3);
  for (const auto& row : log.rows) {
    CHECK(std::isfinite(row.mean_saliency));
    CHECK(std::isfinite(row.mean_offset));
    CHECK(row.mean_total == doctest::Approx(row.mean_saliency + cfg.lambda * row.mean_offset).epsilon(1e-12));
  }

  // Stage subsets run only the requested stages.
  CropModel partial = CropModel::create(cfg.model_config());
  const TrainLog s1 = train(partial, data, cfg, {1});
  REQUIRE(s1.rows.size() == 1);
  CHECK(s1.rows[0].stage == 1);
}

TEST_CASE("predict_crop is single-pass and in bounds") {
  RunConfig cfg = tiny_config();
  const auto data = generate_synthetic(3, 32, 17);
  CropModel model = CropModel::create(cfg.model_config());

  model.params.counters = {};
  const Prediction p = predict_crop(model, data[0].image, cfg);
  CHECK(model.params.counters.saliency_forwards == 1);
  CHECK(model.params.counters.regression_forwards == 1);

  CHECK(p.crop.x_min >= 0.0);
  CHECK(p.crop.y_min >= 0.0);
  CHECK(p.crop.x_max <= 32.0);
  CHECK(p.crop.y_max <= 32.0);
  CHECK(p.crop.ordered());
  CHECK(p.ms_total > 0.0);
  CHECK(p.saliency.dim(0) == 32);
  CHECK(p.saliency.dim(1) == 32);
}

TEST_CASE("non-finite loss aborts with a diagnostic naming stage and sample") {
  RunConfig cfg = tiny_config();
  const auto data = generate_synthetic(2, 32, 41);
  CropModel model = CropModel::create(cfg.model_config());
  model.params.at("saliency.out.bias").value()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(model, data, cfg, {1});
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage 1") != std::string::npos);
    CHECK(msg.find("0000") != std::string::npos);  // sample id
  }
}

TEST_CASE("a model that predicts no saliency falls back to the 70% anchor") {
  RunConfig cfg = tiny_config();
  CropModel model = CropModel::create(cfg.model_config());
  // Force the output conv to emit strongly negative logits: the map is then
  // ~2e-9 everywhere, the binarized mass sits far below the activation
  // threshold, and the full pipeline must take the fallback window.
  Var& w = model.params.at("saliency.out.weight");
  for (std::size_t i = 0; i < w.size(); ++i) w.value()[i] = 0.0;
  model.params.at("saliency.out.bias").value()[0] = -20.0;

  const auto data = generate_synthetic(1, 32, 43);
  const Prediction p = predict_crop(model, data[0].image, cfg);
  CHECK(p.anchor_fallback);
  CHECK(p.anchor.width() / 32.0 == doctest::Approx(std::sqrt(0.70)).epsilon(1e-9));
  CHECK(p.anchor.height() / 32.0 == doctest::Approx(std::sqrt(0.70)).epsilon(1e-9));
  CHECK(p.crop.ordered());
  CHECK(p.crop.area() > 0.0);
  CHECK(p.crop.x_max <= 32.0);
  CHECK(p.crop.y_max <= 32.0);
}

TEST_CASE("an all-zero saliency map still yields a valid crop via the fallback") {
  // Zero offsets decode to the anchor itself, so the fallback anchor is a
  // valid crop on its own.
  const AnchorRegion a = anchor_region(Tensor({64, 64}), 3.0, 0.70);
  REQUIRE(a.used_fallback);
  const Rect crop = decode_rect(a.rect, {}, image_bounds(64, 64));
  CHECK(crop.ordered());
  CHECK(crop.area() > 0.0);
  CHECK(crop.area() / (64.0 * 64.0) == doctest::Approx(0.70).epsilon(1e-9));
}

TEST_CASE("evaluate aggregates per-sample records") {
  RunConfig cfg = tiny_config();
  const auto data = generate_synthetic(5, 32, 21);
  CropModel model = CropModel::create(cfg.model_config());
  const EvalReport report = evaluate(model, data, cfg);

  REQUIRE(report.records.size() == 5);
  double iou_sum = 0.0, bde_sum = 0.0;
  for (const auto& rec : report.records) {
    CHECK(rec.iou >= 0.0);
    CHECK(rec.iou <= 1.0);
    CHECK(rec.bde >= 0.0);
    iou_sum += rec.iou;
    bde_sum += rec.bde;
  }
  CHECK(report.mean_iou == doctest::Approx(iou_sum / 5.0).epsilon(1e-12));
  CHECK(report.mean_bde == doctest::Approx(bde_sum / 5.0).epsilon(1e-12));
}

TEST_CASE("a perfect predictor scores mean IoU 1 and BDE 0") {
  const auto data = generate_synthetic(4, 32, 23);
  double iou_sum = 0.0, bde_sum = 0.0;
  for (const auto& s : data) {
    iou_sum += iou(s.crop, s.crop);
    bde_sum += bde(s.crop, s.crop, 32, 32);
  }
  CHECK(iou_sum / 4.0 == 1.0);
  CHECK(bde_sum / 4.0 == 0.0);
}

TEST_CASE("teacher forcing and gt modes stay finite") {
  RunConfig cfg = tiny_config();
  cfg.teacher_force_saliency = true;
  cfg.gt_mode = "full-image";
  const auto data = generate_synthetic(3, 32, 29);
  CropModel model = CropModel::create(cfg.model_config());
  const TrainLog log = train(model, data, cfg, {2});
  REQUIRE(log.rows.size() == 1);
  CHECK(std::isfinite(log.rows[0].mean_offset));
}
