#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cropforge/errors.hpp"
#include "cropforge/image.hpp"
#include "cropforge/losses.hpp"
#include "cropforge/unet.hpp"

using namespace cropforge;

namespace {

Tensor random_image(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({c, h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.0, 1.0);
  return t;
}

int count_layers(const ModelParams& params) {
  int n = 0;
  for (const auto& name : params.names()) {
    if (name.ends_with(".weight")) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("parameter census follows the construction rule") {
  SUBCASE("depth 1, base 1: 7 conv layers") {
    ModelParams params;
    build_unet(UNetConfig{.depth = 1, .base_channels = 1, .input_channels = 1}, params);
    CHECK(count_layers(params) == 7);
  }
  SUBCASE("depth 4 matches the full-scale block count") {
    ModelParams params;
    build_unet(UNetConfig{.depth = 4, .base_channels = 2, .input_channels = 3}, params);
    // 2 convs per encoder/decoder block, 2 bottleneck convs, 1 output conv.
    CHECK(count_layers(params) == 4 * 2 + 2 + 4 * 2 + 1);
  }
  SUBCASE("decoder input channels are upsampled + skip channels") {
    ModelParams params;
    const UNetConfig cfg{.depth = 2, .base_channels = 4, .input_channels = 1};
    build_unet(cfg, params);
    // Deepest decoder block consumes bottleneck (16) + skip (8) channels.
    CHECK(params.at("saliency.dec1.conv0.weight").shape() == Shape{16 + 8, 8, 3, 3});
    // Shallow block consumes 8 (from dec1) + 4 (skip from enc0).
    CHECK(params.at("saliency.dec0.conv0.weight").shape() == Shape{8 + 4, 4, 3, 3});
  }
}

TEST_CASE("forward shapes and value ranges") {
  const UNetConfig cfg{.depth = 3, .base_channels = 4, .input_channels = 1, .seed = 11};
  ModelParams params;
  build_unet(cfg, params);
  const Tensor img = random_image(1, 64, 64, 5);
  SaliencyOutput out = forward_saliency(cfg, params, img);

  CHECK(out.map.shape() == Shape{1, 64, 64});
  CHECK(out.bottleneck.shape() == Shape{cfg.bottleneck_channels(), 8, 8});
  for (std::size_t i = 0; i < out.map.size(); ++i) {
    CHECK(out.map.value()[i] > 0.0);
    CHECK(out.map.value()[i] < 1.0);
  }
  CHECK(out.map.value().all_finite());
  CHECK(params.counters.saliency_forwards == 1);
}

TEST_CASE("indivisible input dims raise a shape error that mentions resizing") {
  const UNetConfig cfg{.depth = 3, .base_channels = 2, .input_channels = 1};
  ModelParams params;
  build_unet(cfg, params);
  const Tensor img = random_image(1, 60, 64, 5);  // 60 % 8 != 0
  try {
    forward_saliency(cfg, params, img);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("resize") != std::string::npos);
  }
}

TEST_CASE("every saliency parameter receives gradient") {
  const UNetConfig cfg{.depth = 2, .base_channels = 3, .input_channels = 1, .seed = 23};
  ModelParams params;
  build_unet(cfg, params);

  // Accumulate over a few random inputs; a single image can leave a stray
  // dead ReLU path, the statistical claim is over several.
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Tensor img = random_image(1, 32, 32, 100 + s);
    SaliencyOutput out = forward_saliency(cfg, params, img);
    Tensor target({1, 32, 32});
    Rng rng(s);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = rng.coin() ? 1.0 : 0.0;
    backward(bce_loss_op(out.map, target));
  }
  for (const auto& name : params.names()) {
    const Var& p = params.at(name);
    REQUIRE(p.has_grad());
    double linf = 0.0;
    for (double g : p.grad()) linf = std::max(linf, std::fabs(g));
    INFO(name);
    CHECK(linf > 0.0);
  }
}

TEST_CASE("two builds with the same seed are bit-identical") {
  const UNetConfig cfg{.depth = 2, .base_channels = 4, .input_channels = 1, .seed = 77};
  ModelParams a, b;
  build_unet(cfg, a);
  build_unet(cfg, b);
  REQUIRE(a.names() == b.names());
  for (const auto& name : a.names()) {
    const auto& va = a.at(name).value().values();
    const auto& vb = b.at(name).value().values();
    CHECK(va == vb);
  }
}

TEST_CASE("resize_shorter_side follows the stated rule") {
  SUBCASE("exact halving") {
    const ResizedImage r = resize_shorter_side(random_image(1, 448, 448, 1), 224, 8);
    CHECK(r.image.dim(1) == 224);
    CHECK(r.image.dim(2) == 224);
    CHECK(r.scale_x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.scale_y == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("identity when already conforming") {
    const Tensor img = random_image(1, 224, 224, 2);
    const ResizedImage r = resize_shorter_side(img, 224, 8);
    CHECK(r.scale_x == 1.0);
    CHECK(r.scale_y == 1.0);
    CHECK(r.image.values() == img.values());  // bitwise identity
  }
  SUBCASE("floors the longer side to the stride multiple") {
    const ResizedImage r = resize_shorter_side(random_image(1, 300, 500, 3), 224, 8);
    CHECK(r.image.dim(1) == 224);
    CHECK(r.image.dim(2) == 368);  // floor(500 * 224/300) = 373 -> 368
  }
  SUBCASE("idempotent on its own output") {
    const ResizedImage once = resize_shorter_side(random_image(1, 300, 500, 4), 224, 8);
    const ResizedImage twice = resize_shorter_side(once.image, 224, 8);
    CHECK(twice.scale_x == 1.0);
    CHECK(twice.scale_y == 1.0);
    CHECK(twice.image.values() == once.image.values());
  }
  SUBCASE("degenerate input is rejected") {
    CHECK_THROWS_AS(resize_shorter_side(Tensor({1, 0, 10}), 224, 8), ParamError);
  }
}
