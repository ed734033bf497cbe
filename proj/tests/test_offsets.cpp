#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cropforge/errors.hpp"
#include "cropforge/offsets.hpp"
#include "cropforge/rng.hpp"

using namespace cropforge;

TEST_CASE("encode_offsets known values") {
  SUBCASE("identical rects give zero coefficients") {
    const Rect r{10, 20, 60, 90};
    const OffsetCoefficients o = encode_offsets(r, r);
    CHECK(o.alpha_t == 0.0);
    CHECK(o.alpha_b == 0.0);
    CHECK(o.beta_t == 0.0);
    CHECK(o.beta_b == 0.0);
  }
  SUBCASE("centered anchor in a larger aesthetic rect") {
    const OffsetCoefficients o = encode_offsets(Rect{25, 25, 75, 75}, Rect{0, 0, 100, 100});
    CHECK(o.alpha_t == 0.25);
    CHECK(o.alpha_b == 0.25);
    CHECK(o.beta_t == 0.25);
    CHECK(o.beta_b == 0.25);
  }
  SUBCASE("height identity h_a = h_s + (alpha_t + alpha_b) h_a") {
    const Rect anchor{25, 25, 75, 75}, aesthetic{0, 0, 100, 100};
    const OffsetCoefficients o = encode_offsets(anchor, aesthetic);
    const double hs = anchor.height(), ha = aesthetic.height();
    CHECK(std::fabs(ha - (hs + o.alpha_t * ha + o.alpha_b * ha)) < 1e-9);
    const double ws = anchor.width(), wa = aesthetic.width();
    CHECK(std::fabs(wa - (ws + o.beta_t * wa + o.beta_b * wa)) < 1e-9);
  }
  SUBCASE("zero-area aesthetic rect is rejected") {
    CHECK_THROWS_AS(encode_offsets(Rect{0, 0, 10, 10}, Rect{5, 5, 5, 9}), GeometryError);
  }
}

TEST_CASE("decode_rect known values") {
  SUBCASE("zero coefficients reproduce the anchor exactly") {
    const Rect anchor{12.5, 3.25, 77.75, 41.5};
    const Rect out = decode_rect(anchor, {});
    CHECK(out == anchor);
  }
  SUBCASE("symmetric alpha growth") {
    const Rect out = decode_rect(Rect{0, 0, 50, 100}, {0.1, 0.1, 0.0, 0.0});
    // h_a = 100 / 0.8 = 125, split 12.5 up and 12.5 down.
    CHECK(out.y_max - out.y_min == doctest::Approx(125.0).epsilon(1e-12));
    CHECK(out.y_min == doctest::Approx(-12.5).epsilon(1e-12));
    CHECK(out.y_max == doctest::Approx(112.5).epsilon(1e-12));
  }
  SUBCASE("zero-area anchor is rejected") {
    CHECK_THROWS_AS(decode_rect(Rect{5, 5, 5, 10}, {}), GeometryError);
  }
  SUBCASE("denominator clamp bounds runaway predictions") {
    const Rect out = decode_rect(Rect{0, 0, 10, 10}, {0.9, 0.9, 0.0, 0.0});
    // 1 - 1.8 < 0 would flip the rect; the 0.05 floor caps h_a at 20x the
    // anchor, so the corners move 0.9 * 200 each and the rect stays ordered.
    CHECK(out.y_min == doctest::Approx(-180.0).epsilon(1e-12));
    CHECK(out.y_max == doctest::Approx(190.0).epsilon(1e-12));
    CHECK(out.ordered());
  }
  SUBCASE("bounds clamping at inference") {
    const Rect out = decode_rect(Rect{10, 10, 90, 90}, {0.5, 0.5, 0.5, 0.5}, image_bounds(100, 100));
    CHECK(out.x_min >= 0.0);
    CHECK(out.y_min >= 0.0);
    CHECK(out.x_max <= 100.0);
    CHECK(out.y_max <= 100.0);
  }
}

TEST_CASE("encode/decode round trip on random valid pairs") {
  Rng rng(404);
  for (int round = 0; round < 1000; ++round) {
    Rect target;
    target.x_min = rng.uniform(-50.0, 50.0);
    target.y_min = rng.uniform(-50.0, 50.0);
    target.x_max = target.x_min + rng.uniform(20.0, 200.0);
    target.y_max = target.y_min + rng.uniform(20.0, 200.0);
    // Anchor inside-ish the target with at least ~10% of its extent, keeping
    // the decode denominator away from the clamp.
    Rect anchor;
    const double aw = target.width() * rng.uniform(0.1, 1.2);
    const double ah = target.height() * rng.uniform(0.1, 1.2);
    anchor.x_min = target.x_min + rng.uniform(-0.2, 0.8) * (target.width() - aw);
    anchor.y_min = target.y_min + rng.uniform(-0.2, 0.8) * (target.height() - ah);
    anchor.x_max = anchor.x_min + aw;
    anchor.y_max = anchor.y_min + ah;

    const OffsetCoefficients o = encode_offsets(anchor, target);
    if (1.0 - o.alpha_t - o.alpha_b <= kDecodeDenominatorFloor ||
        1.0 - o.beta_t - o.beta_b <= kDecodeDenominatorFloor) {
      continue;
    }
    const Rect back = decode_rect(anchor, o);
    CHECK(std::fabs(back.x_min - target.x_min) < 1e-9);
    CHECK(std::fabs(back.y_min - target.y_min) < 1e-9);
    CHECK(std::fabs(back.x_max - target.x_max) < 1e-9);
    CHECK(std::fabs(back.y_max - target.y_max) < 1e-9);
  }
}

TEST_CASE("coefficients are scale-invariant, decoded rects scale along") {
  Rng rng(505);
  for (int round = 0; round < 100; ++round) {
    const Rect anchor{10, 5, 40, 50};
    const Rect target{0, 0, 60, 80};
    const double s = rng.uniform(0.1, 10.0);
    const OffsetCoefficients o1 = encode_offsets(anchor, target);
    const OffsetCoefficients o2 = encode_offsets(anchor.scaled(s, s), target.scaled(s, s));
    CHECK(o1.alpha_t == doctest::Approx(o2.alpha_t).epsilon(1e-12));
    CHECK(o1.alpha_b == doctest::Approx(o2.alpha_b).epsilon(1e-12));
    CHECK(o1.beta_t == doctest::Approx(o2.beta_t).epsilon(1e-12));
    CHECK(o1.beta_b == doctest::Approx(o2.beta_b).epsilon(1e-12));

    const Rect d1 = decode_rect(anchor, o1).scaled(s, s);
    const Rect d2 = decode_rect(anchor.scaled(s, s), o1);
    CHECK(d1.x_min == doctest::Approx(d2.x_min).epsilon(1e-9));
    CHECK(d1.y_max == doctest::Approx(d2.y_max).epsilon(1e-9));
  }
}

TEST_CASE("ground truth offsets against the full image") {
  SUBCASE("anchor equal to the full image gives zeros") {
    // A uniform map has centroid at the center and a gamma window far wider
    // than the image, so every corner clamps to the bounds.
    const OffsetCoefficients o = ground_truth_offsets(Tensor::full({100, 100}, 1.0), 100, 100, 3.0);
    CHECK(o.alpha_t == 0.0);
    CHECK(o.alpha_b == 0.0);
    CHECK(o.beta_t == 0.0);
    CHECK(o.beta_b == 0.0);
  }
  SUBCASE("interior anchor encodes its margins") {
    // Mass spread uniformly over the exact box (30,30)..(70,70) would give a
    // wider gamma window; use encode directly for the arithmetic case.
    const OffsetCoefficients o = encode_offsets(Rect{30, 30, 70, 70}, Rect{0, 0, 100, 100});
    CHECK(o.alpha_t == doctest::Approx(0.30).epsilon(1e-12));
    CHECK(o.alpha_b == doctest::Approx(0.30).epsilon(1e-12));
    CHECK(o.beta_t == doctest::Approx(0.30).epsilon(1e-12));
    CHECK(o.beta_b == doctest::Approx(0.30).epsilon(1e-12));
  }
  SUBCASE("strictly interior anchors keep coefficient sums below one") {
    Rng rng(7);
    for (int round = 0; round < 200; ++round) {
      Tensor map({64, 64});
      const int cx = rng.uniform_int(20, 44), cy = rng.uniform_int(20, 44);
      for (int j = -3; j <= 3; ++j) {
        for (int i = -3; i <= 3; ++i) {
          map[static_cast<std::size_t>(cy + j) * 64 + (cx + i)] = rng.uniform(0.5, 1.0);
        }
      }
      const OffsetCoefficients o = ground_truth_offsets(map, 64, 64, 3.0);
      CHECK(o.alpha_t + o.alpha_b < 1.0);
      CHECK(o.beta_t + o.beta_b < 1.0);
    }
  }
}

TEST_CASE("encode_offsets_op gradients stay consistent with the pure form") {
  const Rect aesthetic{0, 0, 80, 120};
  Var coords(Tensor({4}, {20.0, 30.0, 60.0, 100.0}), /*requires_grad=*/true);
  Var o = encode_offsets_op(coords, aesthetic);

  const OffsetCoefficients pure = encode_offsets(Rect{20, 30, 60, 100}, aesthetic);
  CHECK(o.value()[0] == pure.alpha_t);
  CHECK(o.value()[1] == pure.alpha_b);
  CHECK(o.value()[2] == pure.beta_t);
  CHECK(o.value()[3] == pure.beta_b);

  backward(o, Tensor({4}, {1.0, 1.0, 1.0, 1.0}));
  CHECK(coords.grad()[0] == doctest::Approx(1.0 / 80.0));   // beta_t via x_min
  CHECK(coords.grad()[1] == doctest::Approx(1.0 / 120.0));  // alpha_t via y_min
  CHECK(coords.grad()[2] == doctest::Approx(-1.0 / 80.0));  // beta_b via x_max
  CHECK(coords.grad()[3] == doctest::Approx(-1.0 / 120.0)); // alpha_b via y_max
}
