#ifndef CROPFORGE_CONFIG_HPP
#define CROPFORGE_CONFIG_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "cropforge/model.hpp"

namespace cropforge {

// One training stage: which group(s) step and at what rate.
struct StageSpec {
  double lr = 0.0;
  int epochs = 0;
  bool train_saliency = false;
  bool train_regression = false;
  bool operator==(const StageSpec&) const = default;
};

// Saliency network first, regression head with frozen saliency weights
// second, joint fine-tuning third.
struct TrainingSchedule {
  std::array<StageSpec, 3> stages{
      StageSpec{1e-4, 4, true, false},
      StageSpec{1e-4, 6, false, true},
      StageSpec{1e-5, 2, true, true},
  };
  bool operator==(const TrainingSchedule&) const = default;
};

// Every tunable of the pipeline, with defaults at the operating point used
// throughout: sigma 0.01, gamma 3.0, lambda 1, shorter side 224. Serializes
// to plain "key = value" text; CLI flags override parsed values.
struct RunConfig {
  double sigma = 0.01;
  double gamma = 3.0;
  double lambda = 1.0;
  double fallback_fraction = 0.70;
  int target_side = 224;

  int depth = 3;
  int base_channels = 8;
  int input_channels = 1;
  int kernel_size = 3;
  int roi_grid = 4;
  int fc1 = 2048;
  int fc2 = 1024;

  std::uint64_t seed = 42;
  double crop_margin = 0.25;

  TrainingSchedule schedule;

  // Offset supervision target: "crop-box" encodes against the dataset's
  // ground-truth crop rect, "full-image" against the whole image.
  std::string gt_mode = "crop-box";
  // Debug aid: compute the training anchor from the ground-truth mask
  // instead of the predicted map during stage 2.
  bool teacher_force_saliency = false;

  ModelConfig model_config() const;

  std::string serialize() const;
  static RunConfig parse(std::istream& is);
  static RunConfig from_file(const std::string& path);

  bool operator==(const RunConfig&) const = default;
};

}  // namespace cropforge

#endif  // CROPFORGE_CONFIG_HPP
