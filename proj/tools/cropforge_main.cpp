// cropforge command-line front end: dataset synthesis, staged training,
// single-image cropping, batch evaluation, and gradient checking.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "cropforge/checkpoint.hpp"
#include "cropforge/dataset.hpp"
#include "cropforge/errors.hpp"
#include "cropforge/gradcheck.hpp"
#include "cropforge/image.hpp"
#include "cropforge/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cropforge;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitGradcheck = 4;

// Pipeline/inference flags shared by train, crop and eval. Values from a
// --config file are applied first, then any flag the user actually passed.
struct ConfigFlags {
  std::string config_path;
  double sigma = 0.01, gamma = 3.0, lambda = 1.0, fallback_fraction = 0.70, crop_margin = 0.25;
  int target_side = 224, depth = 3, base_channels = 8, input_channels = 1, kernel_size = 3;
  int roi_grid = 4, fc1 = 2048, fc2 = 1024;
  std::uint64_t seed = 42;
  double stage1_lr = 1e-4, stage2_lr = 1e-4, stage3_lr = 1e-5;
  int stage1_epochs = 4, stage2_epochs = 6, stage3_epochs = 2;
  std::string gt_mode = "crop-box";
  bool teacher_force = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file; flags override its entries");
    cmd->add_option("--sigma", sigma, "soft binarization scale");
    cmd->add_option("--gamma", gamma, "anchor window width in deviations");
    cmd->add_option("--lambda", lambda, "offset loss weight in the total loss");
    cmd->add_option("--fallback-fraction", fallback_fraction, "image area covered by the fallback anchor");
    cmd->add_option("--target-side", target_side, "shorter side after resizing");
    cmd->add_option("--depth", depth, "encoder/decoder block count");
    cmd->add_option("--base-channels", base_channels, "channels of the first block");
    cmd->add_option("--input-channels", input_channels, "1 or 3");
    cmd->add_option("--kernel-size", kernel_size, "convolution kernel size (odd)");
    cmd->add_option("--roi-grid", roi_grid, "RoI pooling grid");
    cmd->add_option("--fc1", fc1, "first dense layer width");
    cmd->add_option("--fc2", fc2, "second dense layer width");
    cmd->add_option("--seed", seed, "PRNG seed")->envname("CROPFORGE_SEED");
    cmd->add_option("--crop-margin", crop_margin, "synthetic gt crop margin per side");
    cmd->add_option("--stage1-lr", stage1_lr, "stage 1 learning rate");
    cmd->add_option("--stage2-lr", stage2_lr, "stage 2 learning rate");
    cmd->add_option("--stage3-lr", stage3_lr, "stage 3 learning rate");
    cmd->add_option("--stage1-epochs", stage1_epochs, "stage 1 epochs");
    cmd->add_option("--stage2-epochs", stage2_epochs, "stage 2 epochs");
    cmd->add_option("--stage3-epochs", stage3_epochs, "stage 3 epochs");
    cmd->add_option("--gt-mode", gt_mode, "offset supervision target: crop-box|full-image");
    cmd->add_flag("--teacher-force", teacher_force, "anchor from the gt mask during stage 2");
  }

  RunConfig resolve(CLI::App* cmd) const {
    RunConfig cfg;
    if (cmd->count("--config")) cfg = RunConfig::from_file(config_path);
    auto passed = [cmd](const char* name) { return cmd->count(name) > 0; };
    if (passed("--sigma")) cfg.sigma = sigma;
    if (passed("--gamma")) cfg.gamma = gamma;
    if (passed("--lambda")) cfg.lambda = lambda;
    if (passed("--fallback-fraction")) cfg.fallback_fraction = fallback_fraction;
    if (passed("--target-side")) cfg.target_side = target_side;
    if (passed("--depth")) cfg.depth = depth;
    if (passed("--base-channels")) cfg.base_channels = base_channels;
    if (passed("--input-channels")) cfg.input_channels = input_channels;
    if (passed("--kernel-size")) cfg.kernel_size = kernel_size;
    if (passed("--roi-grid")) cfg.roi_grid = roi_grid;
    if (passed("--fc1")) cfg.fc1 = fc1;
    if (passed("--fc2")) cfg.fc2 = fc2;
    if (passed("--seed")) cfg.seed = seed;
    if (passed("--crop-margin")) cfg.crop_margin = crop_margin;
    if (passed("--stage1-lr")) cfg.schedule.stages[0].lr = stage1_lr;
    if (passed("--stage2-lr")) cfg.schedule.stages[1].lr = stage2_lr;
    if (passed("--stage3-lr")) cfg.schedule.stages[2].lr = stage3_lr;
    if (passed("--stage1-epochs")) cfg.schedule.stages[0].epochs = stage1_epochs;
    if (passed("--stage2-epochs")) cfg.schedule.stages[1].epochs = stage2_epochs;
    if (passed("--stage3-epochs")) cfg.schedule.stages[2].epochs = stage3_epochs;
    if (passed("--gt-mode")) cfg.gt_mode = gt_mode;
    if (passed("--teacher-force")) cfg.teacher_force_saliency = teacher_force;
    if (cfg.gt_mode != "crop-box" && cfg.gt_mode != "full-image") {
      throw ParamError("gt_mode must be 'crop-box' or 'full-image'");
    }
    return cfg;
  }
};

json rect_json(const Rect& r) {
  return json{{"x_min", r.x_min}, {"y_min", r.y_min}, {"x_max", r.x_max}, {"y_max", r.y_max}};
}

Tensor crop_pixels(const Tensor& image, const Rect& r) {
  const int h = image.dim(1), w = image.dim(2);
  int x0 = std::clamp(static_cast<int>(std::floor(r.x_min + 0.5)), 0, w - 1);
  int y0 = std::clamp(static_cast<int>(std::floor(r.y_min + 0.5)), 0, h - 1);
  int x1 = std::clamp(static_cast<int>(std::floor(r.x_max + 0.5)), x0 + 1, w);
  int y1 = std::clamp(static_cast<int>(std::floor(r.y_max + 0.5)), y0 + 1, h);
  Tensor out({image.dim(0), y1 - y0, x1 - x0});
  for (int c = 0; c < image.dim(0); ++c) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        out[(static_cast<std::size_t>(c) * (y1 - y0) + (y - y0)) * (x1 - x0) + (x - x0)] =
            image[(static_cast<std::size_t>(c) * h + y) * w + x];
      }
    }
  }
  return out;
}

void draw_rect(Tensor& rgb, const Rect& r, double red, double green, double blue) {
  const int h = rgb.dim(1), w = rgb.dim(2);
  const int x0 = std::clamp(static_cast<int>(std::lround(r.x_min)), 0, w - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(r.y_min)), 0, h - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(r.x_max)) - 1, x0, w - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(r.y_max)) - 1, y0, h - 1);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  auto put = [&](int x, int y) {
    const std::size_t at = static_cast<std::size_t>(y) * w + x;
    rgb[at] = red;
    rgb[plane + at] = green;
    rgb[2 * plane + at] = blue;
  };
  for (int x = x0; x <= x1; ++x) {
    put(x, y0);
    put(x, y1);
  }
  for (int y = y0; y <= y1; ++y) {
    put(x0, y);
    put(x1, y);
  }
}

int cmd_synth(int count, int size, std::uint64_t seed, const std::string& out_dir, double margin) {
  const auto samples = generate_synthetic(count, size, seed, margin);
  write_dataset(out_dir, samples);
  std::printf("wrote %zu samples to %s\n", samples.size(), out_dir.c_str());
  std::printf("manifest checksum: %016llx\n", static_cast<unsigned long long>(dataset_checksum(out_dir)));
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_ckpt,
              const std::string& log_path, const std::set<int>& stages) {
  const Dataset dataset = load_dataset(data_dir, /*require_saliency=*/true);
  for (const auto& id : dataset.missing_crops) {
    std::fprintf(stderr, "warning: no crop ground truth for %s, skipping\n", id.c_str());
  }
  if (dataset.samples.empty()) throw IoError("no trainable samples in " + data_dir);

  CropModel model = CropModel::create(cfg.model_config());
  const TrainLog log = train(model, dataset.samples, cfg, stages);
  model.save(out_ckpt);
  write_loss_log(log_path, log);
  for (const auto& row : log.rows) {
    std::printf("stage %d epoch %d  Ls %.4f  Lr %.6f  total %.4f\n", row.stage, row.epoch, row.mean_saliency,
                row.mean_offset, row.mean_total);
  }
  std::printf("checkpoint: %s\nloss log: %s\n", out_ckpt.c_str(), log_path.c_str());
  return 0;
}

int cmd_crop(const RunConfig& cfg, const std::string& model_path, const std::string& image_path,
             const std::string& out_path, const std::string& sidecar_path, bool emit_saliency, bool emit_anchor) {
  CropModel model = CropModel::load(model_path);
  const Tensor image = load_image(image_path);
  const Prediction p = predict_crop(model, image, cfg);

  save_image_png(out_path, crop_pixels(image, p.crop));

  const fs::path stem = fs::path(out_path).parent_path() / fs::path(out_path).stem();
  if (emit_saliency) {
    // Map back to the original resolution for inspection.
    Tensor map3({1, p.saliency.dim(0), p.saliency.dim(1)}, p.saliency.values());
    save_image_png(stem.string() + ".saliency.png", resize_bilinear(map3, image.dim(1), image.dim(2)));
  }
  if (emit_anchor) {
    Tensor rgb = expand_channels(to_grayscale(image), 3);
    draw_rect(rgb, p.anchor, 1.0, 0.25, 0.25);
    draw_rect(rgb, p.crop, 0.25, 1.0, 0.25);
    save_image_png(stem.string() + ".anchor.png", rgb);
  }

  json sidecar{
      {"schema", 1},
      {"image", {{"path", image_path}, {"width", image.dim(2)}, {"height", image.dim(1)}}},
      {"crop", rect_json(p.crop)},
      {"anchor", rect_json(p.anchor)},
      {"anchor_fallback", p.anchor_fallback},
      {"offsets",
       {{"alpha_t", p.offsets.alpha_t},
        {"alpha_b", p.offsets.alpha_b},
        {"beta_t", p.offsets.beta_t},
        {"beta_b", p.offsets.beta_b}}},
      {"timing_ms",
       {{"resize", p.ms_resize},
        {"saliency", p.ms_saliency},
        {"regression", p.ms_regression},
        {"total", p.ms_total}}},
  };
  std::ofstream os(sidecar_path, std::ios::trunc);
  if (!os) throw IoError("cannot write sidecar: " + sidecar_path);
  os << sidecar.dump(2) << "\n";

  std::printf("crop: [%.2f, %.2f, %.2f, %.2f]  (%.1f ms)\n", p.crop.x_min, p.crop.y_min, p.crop.x_max,
              p.crop.y_max, p.ms_total);
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& model_path, const std::string& data_dir,
             const std::string& out_csv) {
  CropModel model = CropModel::load(model_path);
  const Dataset dataset = load_dataset(data_dir, /*require_saliency=*/false);
  for (const auto& id : dataset.missing_crops) {
    std::fprintf(stderr, "warning: no crop ground truth for %s, skipping\n", id.c_str());
  }
  if (dataset.samples.empty()) {
    std::fprintf(stderr, "error: no evaluable samples in %s\n", data_dir.c_str());
    return kExitUsage;
  }

  const EvalReport report = evaluate(model, dataset.samples, cfg);
  if (!out_csv.empty()) {
    std::ofstream os(out_csv, std::ios::trunc);
    if (!os) throw IoError("cannot write eval report: " + out_csv);
    os << "id,iou,bde,pred_x_min,pred_y_min,pred_x_max,pred_y_max,gt_x_min,gt_y_min,gt_x_max,gt_y_max\n";
    char buf[256];
    for (const auto& r : report.records) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n", r.id.c_str(),
                    r.iou, r.bde, r.predicted.x_min, r.predicted.y_min, r.predicted.x_max, r.predicted.y_max,
                    r.ground_truth.x_min, r.ground_truth.y_min, r.ground_truth.x_max, r.ground_truth.y_max);
      os << buf;
    }
  }
  std::printf("mean_iou=%.6f mean_bde=%.6f (%zu samples, %.1f ms/image)\n", report.mean_iou, report.mean_bde,
              report.records.size(), report.mean_ms_per_image);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto rows = run_gradient_suite(seed, /*rounds=*/10, /*tolerance=*/1e-4);
  std::printf("%-18s %-14s %s\n", "op", "max_rel_err", "status");
  std::string failed;
  for (const auto& row : rows) {
    std::printf("%-18s %-14.3e %s\n", row.op.c_str(), row.max_rel_err, row.pass ? "pass" : "FAIL");
    if (!row.pass && failed.empty()) failed = row.op;
  }
  if (!failed.empty()) {
    std::fprintf(stderr, "gradient check failed for op: %s\n", failed.c_str());
    return kExitGradcheck;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saliency-driven automatic image cropping"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  int synth_count = 0, synth_size = 64;
  std::uint64_t synth_seed = 42;
  double synth_margin = kDefaultCropMargin;
  std::string synth_out;
  synth->add_option("--count", synth_count, "number of samples")->required();
  synth->add_option("--size", synth_size, "square image side");
  synth->add_option("--seed", synth_seed, "PRNG seed")->envname("CROPFORGE_SEED");
  synth->add_option("--margin", synth_margin, "gt crop margin per side, fraction of the object box");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "run the three-stage training scheme");
  ConfigFlags train_flags;
  train_flags.attach(train_cmd);
  std::string train_data, train_out = "model.cfck", train_log;
  std::vector<int> train_stages;
  train_cmd->add_option("--data", train_data, "dataset directory")->required();
  train_cmd->add_option("--out", train_out, "checkpoint path");
  train_cmd->add_option("--log", train_log, "loss log CSV path (default: <out>.loss.csv)");
  train_cmd->add_option("--stages", train_stages, "subset of stages to run, e.g. --stages 1 2")
      ->check(CLI::Range(1, 3));

  // crop
  auto* crop_cmd = app.add_subcommand("crop", "crop a single image");
  ConfigFlags crop_flags;
  crop_flags.attach(crop_cmd);
  std::string crop_model, crop_image, crop_out = "crop.png", crop_sidecar;
  bool emit_saliency = false, emit_anchor = false;
  crop_cmd->add_option("--model", crop_model, "checkpoint path")->required();
  crop_cmd->add_option("--image", crop_image, "input image (PNG or PGM)")->required();
  crop_cmd->add_option("--out", crop_out, "cropped output PNG");
  crop_cmd->add_option("--sidecar", crop_sidecar, "JSON sidecar path (default: <out>.json)");
  crop_cmd->add_flag("--emit-saliency", emit_saliency, "write the predicted map next to the output");
  crop_cmd->add_flag("--emit-anchor", emit_anchor, "write an annotated overview image");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ConfigFlags eval_flags;
  eval_flags.attach(eval_cmd);
  std::string eval_model, eval_data, eval_out;
  eval_cmd->add_option("--model", eval_model, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "per-sample CSV report path");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every layer");
  std::uint64_t grad_seed = 42;
  grad_cmd->add_option("--seed", grad_seed, "PRNG seed")->envname("CROPFORGE_SEED");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (synth_count < 1) {
        std::fprintf(stderr, "error: --count must be >= 1\n");
        return kExitUsage;
      }
      return cmd_synth(synth_count, synth_size, synth_seed, synth_out, synth_margin);
    }
    if (train_cmd->parsed()) {
      const RunConfig cfg = train_flags.resolve(train_cmd);
      std::set<int> stages(train_stages.begin(), train_stages.end());
      if (stages.empty()) stages = {1, 2, 3};
      const std::string log_path = train_log.empty() ? train_out + ".loss.csv" : train_log;
      return cmd_train(cfg, train_data, train_out, log_path, stages);
    }
    if (crop_cmd->parsed()) {
      const RunConfig cfg = crop_flags.resolve(crop_cmd);
      const std::string sidecar = crop_sidecar.empty() ? crop_out + ".json" : crop_sidecar;
      return cmd_crop(cfg, crop_model, crop_image, crop_out, sidecar, emit_saliency, emit_anchor);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_flags.resolve(eval_cmd), eval_model, eval_data, eval_out);
    }
    if (grad_cmd->parsed()) {
      return cmd_gradcheck(grad_seed);
    }
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
