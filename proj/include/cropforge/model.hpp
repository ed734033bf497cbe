#ifndef CROPFORGE_MODEL_HPP
#define CROPFORGE_MODEL_HPP

#include <string>

#include "cropforge/params.hpp"
#include "cropforge/unet.hpp"

namespace cropforge {

// Offset regression head: RoI-pooled bottleneck features flattened into two
// ReLU fully connected layers (2048 and 1024 wide) and a 4-unit linear
// output.
struct HeadConfig {
  int grid = 4;
  int fc1 = 2048;
  int fc2 = 1024;
};

struct ModelConfig {
  UNetConfig unet;
  HeadConfig head;
};

// Registers the regression group ("regress.*") parameters.
void build_head(const UNetConfig& unet, const HeadConfig& head, ModelParams& params);

// pooled is [C_b, grid, grid]; returns the 4 offset coefficients
// (alpha_t, alpha_b, beta_t, beta_b), linear activation.
Var forward_head(const HeadConfig& head, ModelParams& params, const Var& pooled);

// The full trainable model: both parameter groups plus the architecture
// hyperparameters, kept together so a checkpoint is self-describing.
struct CropModel {
  ModelConfig cfg;
  ModelParams params;

  static CropModel create(const ModelConfig& cfg);

  void save(const std::string& path) const;
  static CropModel load(const std::string& path);
};

}  // namespace cropforge

#endif  // CROPFORGE_MODEL_HPP
