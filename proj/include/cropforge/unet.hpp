#ifndef CROPFORGE_UNET_HPP
#define CROPFORGE_UNET_HPP

#include <cstdint>

#include "cropforge/autodiff.hpp"
#include "cropforge/params.hpp"
#include "cropforge/rng.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

// U-shaped encoder-decoder for saliency detection. Each encoder block is two
// 3x3 convolutions (ReLU) followed by 2x2 max pooling, channels doubling per
// block; the bottleneck is two convolutions; each decoder block is a 2x
// nearest upsample, concatenation with the matching encoder skip, and two
// transposed convolutions (ReLU); a final 1x1 convolution plus sigmoid emits
// the one-channel map.
struct UNetConfig {
  int depth = 3;          // encoder/decoder block count; full-scale reference is 4
  int base_channels = 8;  // channels of the first block
  int input_channels = 1;
  int kernel_size = 3;
  std::uint64_t seed = 1234;

  int stride() const { return 1 << depth; }
  int bottleneck_channels() const { return base_channels << depth; }
};

struct SaliencyOutput {
  Var map;         // [1,H,W], values in (0,1)
  Var bottleneck;  // [C_b, H/2^depth, W/2^depth]
};

// Uniform init on +-sqrt(6 / (fan_in + fan_out)), biases zero.
Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng);

// Registers the saliency group ("saliency.*") parameters.
void build_unet(const UNetConfig& cfg, ModelParams& params);

// Runs the network; image is [C,H,W] with H and W divisible by 2^depth.
SaliencyOutput forward_saliency(const UNetConfig& cfg, ModelParams& params, const Tensor& image);

}  // namespace cropforge

#endif  // CROPFORGE_UNET_HPP
