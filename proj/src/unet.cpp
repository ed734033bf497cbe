#include "cropforge/unet.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

std::string block_name(const char* kind, int i) {
  return "saliency." + std::string(kind) + std::to_string(i);
}

void add_conv(ModelParams& params, const std::string& prefix, int cin, int cout, int k, Rng& rng) {
  const int fan_in = cin * k * k, fan_out = cout * k * k;
  params.add(prefix + ".weight", ParamGroup::kSaliency, glorot_uniform({cout, cin, k, k}, fan_in, fan_out, rng));
  params.add(prefix + ".bias", ParamGroup::kSaliency, Tensor({cout}));
}

void add_tconv(ModelParams& params, const std::string& prefix, int cin, int cout, int k, Rng& rng) {
  const int fan_in = cin * k * k, fan_out = cout * k * k;
  params.add(prefix + ".weight", ParamGroup::kSaliency, glorot_uniform({cin, cout, k, k}, fan_in, fan_out, rng));
  params.add(prefix + ".bias", ParamGroup::kSaliency, Tensor({cout}));
}

Var conv_block(ModelParams& params, const std::string& prefix, const Var& x) {
  return relu(conv2d(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"), Padding::kSame));
}

Var tconv_block(ModelParams& params, const std::string& prefix, const Var& x) {
  return relu(conv_transpose2d(x, params.at(prefix + ".weight"), params.at(prefix + ".bias")));
}

}  // namespace

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

void build_unet(const UNetConfig& cfg, ModelParams& params) {
  if (cfg.depth < 1 || cfg.base_channels < 1) throw ParamError("build_unet: depth and base_channels must be >= 1");
  if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0) throw ParamError("build_unet: kernel_size must be odd");
  Rng rng(cfg.seed);
  const int k = cfg.kernel_size;

  int cin = cfg.input_channels;
  for (int i = 0; i < cfg.depth; ++i) {
    const int cout = cfg.base_channels << i;
    add_conv(params, block_name("enc", i) + ".conv0", cin, cout, k, rng);
    add_conv(params, block_name("enc", i) + ".conv1", cout, cout, k, rng);
    cin = cout;
  }

  const int cb = cfg.bottleneck_channels();
  add_conv(params, "saliency.bottleneck.conv0", cin, cb, k, rng);
  add_conv(params, "saliency.bottleneck.conv1", cb, cb, k, rng);

  int cup = cb;
  for (int i = cfg.depth - 1; i >= 0; --i) {
    const int cskip = cfg.base_channels << i;
    add_tconv(params, block_name("dec", i) + ".conv0", cup + cskip, cskip, k, rng);
    add_tconv(params, block_name("dec", i) + ".conv1", cskip, cskip, k, rng);
    cup = cskip;
  }

  add_conv(params, "saliency.out", cfg.base_channels, 1, 1, rng);
}

SaliencyOutput forward_saliency(const UNetConfig& cfg, ModelParams& params, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != cfg.input_channels) {
    throw ShapeError("forward_saliency expects [" + std::to_string(cfg.input_channels) + ",H,W], got " +
                     image.shape_str());
  }
  const int stride = cfg.stride();
  if (image.dim(1) % stride != 0 || image.dim(2) % stride != 0) {
    throw ShapeError("forward_saliency: spatial dims " + image.shape_str() + " not divisible by 2^depth=" +
                     std::to_string(stride) + "; resize the input first (resize_shorter_side)");
  }
  params.counters.saliency_forwards++;

  Var x(image);
  std::vector<Var> skips;
  skips.reserve(static_cast<std::size_t>(cfg.depth));
  for (int i = 0; i < cfg.depth; ++i) {
    x = conv_block(params, block_name("enc", i) + ".conv0", x);
    x = conv_block(params, block_name("enc", i) + ".conv1", x);
    skips.push_back(x);
    x = maxpool2d(x);
  }

  x = conv_block(params, "saliency.bottleneck.conv0", x);
  x = conv_block(params, "saliency.bottleneck.conv1", x);
  Var bottleneck = x;

  for (int i = cfg.depth - 1; i >= 0; --i) {
    x = upsample_nearest(x);
    x = concat_channels(x, skips[static_cast<std::size_t>(i)]);
    x = tconv_block(params, block_name("dec", i) + ".conv0", x);
    x = tconv_block(params, block_name("dec", i) + ".conv1", x);
  }

  Var map = sigmoid(conv2d(x, params.at("saliency.out.weight"), params.at("saliency.out.bias"), Padding::kSame));
  return {map, bottleneck};
}

}  // namespace cropforge
