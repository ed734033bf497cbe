#ifndef CROPFORGE_TRAINING_HPP
#define CROPFORGE_TRAINING_HPP

#include <set>
#include <string>
#include <vector>

#include "cropforge/config.hpp"
#include "cropforge/model.hpp"
#include "cropforge/offsets.hpp"
#include "cropforge/rect.hpp"
#include "cropforge/synthetic.hpp"

namespace cropforge {

struct EpochLoss {
  int stage = 0;
  int epoch = 0;  // 1-based within the stage
  double mean_saliency = 0.0;
  double mean_offset = 0.0;
  double mean_total = 0.0;
};

struct TrainLog {
  std::vector<EpochLoss> rows;
};

// Runs the staged schedule from cfg.schedule over `data`:
//   stage 1 minimizes the pixel BCE only (regression head untouched),
//   stage 2 freezes the saliency weights and fits the head with L2 on the
//           offsets, anchors taken from the predicted binarized map,
//   stage 3 fine-tunes everything on saliency_loss + lambda * offset_loss.
// `stages` selects a subset (e.g. {1}). Epoch order is reshuffled with the
// config seed, so identical inputs give bit-identical final weights.
// Throws DivergenceError naming stage and sample on a non-finite loss.
TrainLog train(CropModel& model, const std::vector<SyntheticSample>& data, const RunConfig& cfg,
               const std::set<int>& stages = {1, 2, 3});

struct Prediction {
  Rect crop;    // original-image coordinates
  Rect anchor;  // original-image coordinates
  OffsetCoefficients offsets;
  Tensor saliency;  // [H',W'] map at network resolution
  double scale_x = 1.0, scale_y = 1.0;  // network space = original * scale
  bool anchor_fallback = false;
  double ms_resize = 0.0, ms_saliency = 0.0, ms_regression = 0.0, ms_total = 0.0;
};

// Single-pass inference: saliency -> soft binarize -> anchor -> RoI pool on
// the bottleneck -> dense head -> decode, then rectangles mapped back to
// original coordinates. Exactly one saliency forward and one regression
// forward per call.
Prediction predict_crop(CropModel& model, const Tensor& image, const RunConfig& cfg);

struct EvalRecord {
  std::string id;
  double iou = 0.0;
  double bde = 0.0;
  Rect predicted;
  Rect ground_truth;
};

struct EvalReport {
  double mean_iou = 0.0;
  double mean_bde = 0.0;
  double mean_ms_per_image = 0.0;
  std::vector<EvalRecord> records;
};

EvalReport evaluate(CropModel& model, const std::vector<SyntheticSample>& data, const RunConfig& cfg);

// Loss log CSV: header plus one "stage,epoch,mean_ls,mean_lr,total" row per
// epoch, %.17g floats so reruns are byte-identical.
void write_loss_log(const std::string& path, const TrainLog& log);

}  // namespace cropforge

#endif  // CROPFORGE_TRAINING_HPP
