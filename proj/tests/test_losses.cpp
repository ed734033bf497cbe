#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cropforge/errors.hpp"
#include "cropforge/gradcheck.hpp"
#include "cropforge/losses.hpp"
#include "cropforge/rng.hpp"

using namespace cropforge;

TEST_CASE("bce per-pixel values") {
  SUBCASE("uninformative prediction costs ln 2 per pixel") {
    const Tensor half = Tensor::full({3, 3}, 0.5);
    CHECK(bce_loss(half, half) == doctest::Approx(9.0 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("near-perfect prediction costs almost nothing") {
    const Tensor target = Tensor::full({2, 2}, 1.0);
    const Tensor predicted = Tensor::full({2, 2}, 1.0 - 1e-7);
    CHECK(bce_loss(predicted, target) == doctest::Approx(4.0 * 1e-7).epsilon(1e-3));
  }
  SUBCASE("confident miss costs ln 4") {
    const Tensor target = Tensor::full({1, 1}, 1.0);
    const Tensor predicted = Tensor::full({1, 1}, 0.25);
    CHECK(bce_loss(predicted, target) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(bce_loss(Tensor({2, 2}), Tensor({2, 3})), ShapeError);
  }
  SUBCASE("saturated probabilities stay finite through the clamp") {
    const Tensor target = Tensor::full({1, 1}, 1.0);
    CHECK(std::isfinite(bce_loss(Tensor({1, 1}), target)));
  }
}

TEST_CASE("bce gradient w.r.t. logits is (p - t)") {
  Rng rng(9);
  Tensor logits({8});
  Tensor target({8});
  for (std::size_t i = 0; i < 8; ++i) {
    logits[i] = rng.uniform(-2.0, 2.0);
    target[i] = rng.coin() ? 1.0 : 0.0;
  }

  Var z(logits, /*requires_grad=*/true);
  Var p = sigmoid(z);
  Var loss = bce_loss_op(p, target);
  backward(loss);
  for (std::size_t i = 0; i < 8; ++i) {
    const double prob = p.value()[i];
    CHECK(z.grad()[i] == doctest::Approx(prob - target[i]).epsilon(1e-12));
  }

  const auto report = gradient_check(
      [&target](const Var& v) { return bce_loss_op(sigmoid(v), target); }, logits, 1e-5);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("offset l2 loss") {
  CHECK(offset_l2_loss({0.1, 0.2, 0.3, 0.4}, {0.1, 0.2, 0.3, 0.4}) == 0.0);
  CHECK(offset_l2_loss({0.1, 0, 0, 0}, {}) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(offset_l2_loss({0.1, 0.2, 0.3, 0.4}, {}) == doctest::Approx(0.30).epsilon(1e-15));
}

TEST_CASE("total loss composition") {
  CHECK(total_loss(0.5, 0.2, 1.0).total == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(total_loss(0.5, 0.2, 0.0).total == 0.5);
  CHECK(total_loss(1.0, 0.5, 2.0).total == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(total_loss(1.0, 1.0, -0.5), ParamError);

  // Linear in each component.
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform(0.0, 5.0), b = rng.uniform(0.0, 5.0), l = rng.uniform(0.0, 3.0);
    const double k = rng.uniform(0.0, 4.0);
    CHECK(total_loss(k * a, b, l).total == doctest::Approx(k * a + l * b).epsilon(1e-12));
    CHECK(total_loss(a, k * b, l).total == doctest::Approx(a + l * k * b).epsilon(1e-12));
  }
}

TEST_CASE("iou identities") {
  const Rect a{0, 0, 100, 100};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Rect{200, 200, 300, 300}) == 0.0);
  CHECK(std::fabs(iou(a, Rect{50, 0, 150, 100}) - 1.0 / 3.0) < 1e-12);
  CHECK(iou(Rect{5, 5, 5, 5}, Rect{5, 5, 5, 5}) == 0.0);  // zero-area convention
}

TEST_CASE("iou is symmetric and invariant under joint translation/scale") {
  Rng rng(31);
  for (int round = 0; round < 100; ++round) {
    Rect a{rng.uniform(0, 50), rng.uniform(0, 50), 0, 0};
    a.x_max = a.x_min + rng.uniform(1, 60);
    a.y_max = a.y_min + rng.uniform(1, 60);
    Rect b{rng.uniform(0, 50), rng.uniform(0, 50), 0, 0};
    b.x_max = b.x_min + rng.uniform(1, 60);
    b.y_max = b.y_min + rng.uniform(1, 60);

    const double v = iou(a, b);
    CHECK(iou(b, a) == v);

    const double dx = rng.uniform(-30, 30), dy = rng.uniform(-30, 30), s = rng.uniform(0.1, 8.0);
    const Rect at{a.x_min + dx, a.y_min + dy, a.x_max + dx, a.y_max + dy};
    const Rect bt{b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
    CHECK(iou(at, bt) == doctest::Approx(v).epsilon(1e-12));
    CHECK(iou(a.scaled(s, s), b.scaled(s, s)) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("bde identities") {
  const Rect a{0, 0, 100, 100};
  CHECK(bde(a, a, 100, 100) == 0.0);
  CHECK(std::fabs(bde(a, Rect{0, 0, 90, 100}, 100, 100) - 0.025) < 1e-12);
  CHECK(std::fabs(bde(a, Rect{25, 25, 75, 75}, 100, 100) - 0.25) < 1e-12);
  CHECK_THROWS_AS(bde(a, a, 0, 100), ParamError);
}

TEST_CASE("bde is symmetric and scale-invariant with the image") {
  Rng rng(37);
  for (int round = 0; round < 100; ++round) {
    const Rect a{rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(50, 100), rng.uniform(50, 100)};
    const Rect b{rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(50, 100), rng.uniform(50, 100)};
    const double v = bde(a, b, 100, 100);
    CHECK(bde(b, a, 100, 100) == v);
    CHECK(bde(a.scaled(3, 3), b.scaled(3, 3), 300, 300) == doctest::Approx(v).epsilon(1e-12));
    if (a != b) CHECK(v > 0.0);
  }
}
