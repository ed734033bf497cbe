#include "cropforge/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "cropforge/crop_layers.hpp"
#include "cropforge/errors.hpp"
#include "cropforge/image.hpp"
#include "cropforge/losses.hpp"
#include "cropforge/rng.hpp"

namespace cropforge {

namespace {

Tensor adapt_channels(const Tensor& image, int wanted) {
  if (image.dim(0) == wanted) return image;
  if (wanted == 1) return to_grayscale(image);
  return expand_channels(image.dim(0) == 1 ? image : to_grayscale(image), wanted);
}

struct PreparedSample {
  Tensor image;       // [C,H',W'] channel-adapted and resized
  Tensor target_map;  // [1,H',W'] saliency target
  Rect crop;          // in resized coordinates
};

PreparedSample prepare(const SyntheticSample& s, const RunConfig& cfg) {
  PreparedSample p;
  const Tensor adapted = adapt_channels(s.image, cfg.input_channels);
  ResizedImage r = resize_shorter_side(adapted, cfg.target_side, 1 << cfg.depth);
  p.image = std::move(r.image);
  const Tensor mask({1, s.saliency.dim(0), s.saliency.dim(1)}, s.saliency.values());
  p.target_map = resize_bilinear(mask, p.image.dim(1), p.image.dim(2));
  p.crop = s.crop.scaled(r.scale_x, r.scale_y);
  return p;
}

void check_finite(double loss, int stage, const std::string& id) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite loss in stage " + std::to_string(stage) + ", sample " + id);
  }
}

struct RegressionBranch {
  Var loss;
  bool fallback = false;
};

// Shared by stages 2 and 3: binarize the map, derive the anchor, pool the
// bottleneck under it, and L2 the head output against the offsets that warp
// this anchor onto the aesthetic rect.
RegressionBranch regression_branch(CropModel& model, const Var& map, const Var& bottleneck,
                                   const PreparedSample& p, const RunConfig& cfg) {
  const int h = map.shape()[1], w = map.shape()[2];
  Var binarized = soft_binarize(reshape(map, {h, w}), cfg.sigma);
  AnchorOp anchor = anchor_region_op(binarized, cfg.gamma, cfg.fallback_fraction);
  const Rect aesthetic = cfg.gt_mode == "crop-box" ? p.crop : image_bounds(w, h);
  Var target = encode_offsets_op(anchor.coords, aesthetic);
  Var pooled = roi_pool(bottleneck, anchor.region.rect, 1 << cfg.depth, cfg.roi_grid);
  Var predicted = forward_head(model.cfg.head, model.params, pooled);
  return {square_sum(sub(predicted, target)), anchor.region.used_fallback};
}

double ms_between(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

TrainLog train(CropModel& model, const std::vector<SyntheticSample>& data, const RunConfig& cfg,
               const std::set<int>& stages) {
  if (data.empty()) throw ParamError("train: dataset is empty");
  TrainLog log;

  for (int si = 0; si < 3; ++si) {
    const int stage = si + 1;
    if (!stages.count(stage)) continue;
    const StageSpec& spec = cfg.schedule.stages[static_cast<std::size_t>(si)];
    model.params.set_frozen(ParamGroup::kSaliency, !spec.train_saliency);
    model.params.set_frozen(ParamGroup::kRegression, !spec.train_regression);
    model.params.zero_all_grads();

    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle_rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(stage * 1000 + epoch)));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
      }

      double sum_ls = 0.0, sum_lr = 0.0;
      for (std::size_t idx : order) {
        const SyntheticSample& sample = data[idx];
        const PreparedSample p = prepare(sample, cfg);
        double ls = 0.0, lr = 0.0;

        if (stage == 1) {
          SaliencyOutput out = forward_saliency(model.cfg.unet, model.params, p.image);
          Var loss = bce_loss_op(out.map, p.target_map);
          ls = loss.value()[0];
          check_finite(ls, stage, sample.id);
          backward(loss);
        } else if (stage == 2) {
          SaliencyOutput out = forward_saliency(model.cfg.unet, model.params, p.image);
          ls = bce_loss(out.map.value(), p.target_map);  // logged, not optimized
          check_finite(ls, stage, sample.id);
          // Saliency weights are locked; detaching skips their backward work.
          Var map = cfg.teacher_force_saliency ? Var(p.target_map) : out.map.detach();
          RegressionBranch branch = regression_branch(model, map, out.bottleneck.detach(), p, cfg);
          lr = branch.loss.value()[0];
          check_finite(lr, stage, sample.id);
          backward(branch.loss);
        } else {
          SaliencyOutput out = forward_saliency(model.cfg.unet, model.params, p.image);
          Var ls_op = bce_loss_op(out.map, p.target_map);
          RegressionBranch branch = regression_branch(model, out.map, out.bottleneck, p, cfg);
          Var total = add_scaled(ls_op, branch.loss, cfg.lambda);
          ls = ls_op.value()[0];
          lr = branch.loss.value()[0];
          check_finite(ls + cfg.lambda * lr, stage, sample.id);
          backward(total);
        }
        sgd_step(model.params, spec.lr);
        sum_ls += ls;
        sum_lr += lr;
      }

      const double n = static_cast<double>(data.size());
      const LossReport epoch_loss = total_loss(sum_ls / n, sum_lr / n, cfg.lambda);
      log.rows.push_back({stage, epoch, epoch_loss.saliency_loss, epoch_loss.offset_loss, epoch_loss.total});
    }
  }

  model.params.set_frozen(ParamGroup::kSaliency, false);
  model.params.set_frozen(ParamGroup::kRegression, false);
  return log;
}

Prediction predict_crop(CropModel& model, const Tensor& image, const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Tensor adapted = adapt_channels(image, model.cfg.unet.input_channels);
  ResizedImage resized = resize_shorter_side(adapted, cfg.target_side, model.cfg.unet.stride());
  const auto t1 = clock::now();

  SaliencyOutput out = forward_saliency(model.cfg.unet, model.params, resized.image);
  const auto t2 = clock::now();

  const int h = out.map.shape()[1], w = out.map.shape()[2];
  Tensor map2d({h, w}, out.map.value().values());
  const Tensor binarized = soft_binarize_map(map2d, cfg.sigma);
  const AnchorRegion anchor = anchor_region(binarized, cfg.gamma, cfg.fallback_fraction);
  Var pooled = roi_pool(out.bottleneck, anchor.rect, model.cfg.unet.stride(), model.cfg.head.grid);
  const Var coeff_var = forward_head(model.cfg.head, model.params, pooled);
  const OffsetCoefficients coeffs = offsets_from_tensor(coeff_var.value());
  const Rect crop_resized = decode_rect(anchor.rect, coeffs, image_bounds(w, h));
  const auto t3 = clock::now();

  Prediction pr;
  pr.offsets = coeffs;
  pr.saliency = std::move(map2d);
  pr.scale_x = resized.scale_x;
  pr.scale_y = resized.scale_y;
  pr.anchor_fallback = anchor.used_fallback;
  const Rect original = image_bounds(image.dim(2), image.dim(1));
  pr.crop = crop_resized.scaled(1.0 / resized.scale_x, 1.0 / resized.scale_y).clamped_to(original);
  pr.anchor = anchor.rect.scaled(1.0 / resized.scale_x, 1.0 / resized.scale_y).clamped_to(original);
  pr.ms_resize = ms_between(t0, t1);
  pr.ms_saliency = ms_between(t1, t2);
  pr.ms_regression = ms_between(t2, t3);
  pr.ms_total = ms_between(t0, t3);
  return pr;
}

EvalReport evaluate(CropModel& model, const std::vector<SyntheticSample>& data, const RunConfig& cfg) {
  EvalReport report;
  for (const auto& sample : data) {
    Prediction p = predict_crop(model, sample.image, cfg);
    EvalRecord rec;
    rec.id = sample.id;
    rec.predicted = p.crop;
    rec.ground_truth = sample.crop;
    rec.iou = iou(p.crop, sample.crop);
    rec.bde = bde(p.crop, sample.crop, sample.image.dim(2), sample.image.dim(1));
    report.mean_iou += rec.iou;
    report.mean_bde += rec.bde;
    report.mean_ms_per_image += p.ms_total;
    report.records.push_back(std::move(rec));
  }
  if (!report.records.empty()) {
    const double n = static_cast<double>(report.records.size());
    report.mean_iou /= n;
    report.mean_bde /= n;
    report.mean_ms_per_image /= n;
  }
  return report;
}

void write_loss_log(const std::string& path, const TrainLog& log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write loss log: " + path);
  os << "stage,epoch,mean_ls,mean_lr,total\n";
  char buf[128];
  for (const auto& row : log.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", row.stage, row.epoch, row.mean_saliency,
                  row.mean_offset, row.mean_total);
    os << buf;
  }
  if (!os) throw IoError("failed writing loss log: " + path);
}

}  // namespace cropforge
