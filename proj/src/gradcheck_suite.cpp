#include <cmath>

#include "cropforge/crop_layers.hpp"
#include "cropforge/errors.hpp"
#include "cropforge/gradcheck.hpp"
#include "cropforge/losses.hpp"

namespace cropforge {

namespace {

constexpr double kEps = 1e-5;

Tensor random_tensor(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Tensor random_projection(std::size_t n, Rng& rng) {
  Tensor t({static_cast<int>(n)});
  for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(0.25, 1.75) * (rng.coin() ? 1.0 : -1.0);
  return t;
}

double check_leaf(const std::function<Var(const Var&)>& op, const Tensor& input, const Tensor& projection) {
  return gradient_check(op, input, kEps, &projection).max_rel_err;
}

double conv2d_round(Rng& rng, Padding padding) {
  const Tensor input = shuffled_linspace({2, 6, 6}, 0.1, 0.9, rng);
  const Tensor weights = shuffled_linspace({3, 2, 3, 3}, -0.5, 0.5, rng);
  const Tensor bias = random_tensor({3}, -0.2, 0.2, rng);
  const int side = padding == Padding::kSame ? 6 : 4;
  const Tensor proj = random_projection(static_cast<std::size_t>(3 * side * side), rng);
  double worst = 0.0;
  worst = std::max(worst, check_leaf([&](const Var& x) { return conv2d(x, Var(weights), Var(bias), padding); },
                                     input, proj));
  worst = std::max(worst, check_leaf([&](const Var& w) { return conv2d(Var(input), w, Var(bias), padding); },
                                     weights, proj));
  worst = std::max(worst, check_leaf([&](const Var& b) { return conv2d(Var(input), Var(weights), b, padding); },
                                     bias, proj));
  return worst;
}

double conv_transpose_round(Rng& rng) {
  const Tensor input = shuffled_linspace({2, 6, 6}, 0.1, 0.9, rng);
  const Tensor weights = shuffled_linspace({2, 3, 3, 3}, -0.5, 0.5, rng);
  const Tensor bias = random_tensor({3}, -0.2, 0.2, rng);
  const Tensor proj = random_projection(static_cast<std::size_t>(3 * 6 * 6), rng);
  double worst = 0.0;
  worst = std::max(worst, check_leaf([&](const Var& x) { return conv_transpose2d(x, Var(weights), Var(bias)); },
                                     input, proj));
  worst = std::max(worst, check_leaf([&](const Var& w) { return conv_transpose2d(Var(input), w, Var(bias)); },
                                     weights, proj));
  worst = std::max(worst, check_leaf([&](const Var& b) { return conv_transpose2d(Var(input), Var(weights), b); },
                                     bias, proj));
  return worst;
}

double maxpool_round(Rng& rng) {
  const Tensor input = shuffled_linspace({2, 6, 6}, 0.1, 0.9, rng);
  const Tensor proj = random_projection(static_cast<std::size_t>(2 * 3 * 3), rng);
  return check_leaf([](const Var& x) { return maxpool2d(x); }, input, proj);
}

double upsample_round(Rng& rng) {
  const Tensor input = random_tensor({2, 5, 5}, 0.1, 0.9, rng);
  const Tensor proj = random_projection(static_cast<std::size_t>(2 * 10 * 10), rng);
  return check_leaf([](const Var& x) { return upsample_nearest(x); }, input, proj);
}

double concat_round(Rng& rng) {
  const Tensor a = random_tensor({2, 4, 4}, 0.1, 0.9, rng);
  const Tensor b = random_tensor({3, 4, 4}, 0.1, 0.9, rng);
  const Tensor proj = random_projection(static_cast<std::size_t>(5 * 4 * 4), rng);
  double worst = 0.0;
  worst = std::max(worst, check_leaf([&](const Var& x) { return concat_channels(x, Var(b)); }, a, proj));
  worst = std::max(worst, check_leaf([&](const Var& x) { return concat_channels(Var(a), x); }, b, proj));
  return worst;
}

double fc_round(Rng& rng) {
  const Tensor x = random_tensor({10}, 0.1, 0.9, rng);
  const Tensor w = random_tensor({6, 10}, -0.5, 0.5, rng);
  const Tensor b = random_tensor({6}, -0.2, 0.2, rng);
  const Tensor proj = random_projection(6, rng);
  double worst = 0.0;
  worst = std::max(worst, check_leaf([&](const Var& v) { return fully_connected(v, Var(w), Var(b)); }, x, proj));
  worst = std::max(worst, check_leaf([&](const Var& v) { return fully_connected(Var(x), v, Var(b)); }, w, proj));
  worst = std::max(worst, check_leaf([&](const Var& v) { return fully_connected(Var(x), Var(w), v); }, b, proj));
  return worst;
}

double relu_round(Rng& rng) {
  // Even count keeps the linspace clear of the kink at zero.
  const Tensor input = shuffled_linspace({40}, -0.9, 0.9, rng);
  const Tensor proj = random_projection(40, rng);
  return check_leaf([](const Var& x) { return relu(x); }, input, proj);
}

double sigmoid_round(Rng& rng) {
  const Tensor input = random_tensor({40}, -2.0, 2.0, rng);
  const Tensor proj = random_projection(40, rng);
  return check_leaf([](const Var& x) { return sigmoid(x); }, input, proj);
}

double soft_binarize_round(Rng& rng, double sigma) {
  const Tensor input = shuffled_linspace({30}, 0.04, 0.95, rng);
  const Tensor proj = random_projection(30, rng);
  return check_leaf([sigma](const Var& x) { return soft_binarize(x, sigma); }, input, proj);
}

double anchor_round(Rng& rng, double gamma) {
  // Draw until the window is strictly interior: the finite-difference
  // comparison is only meaningful away from the clamp boundaries.
  for (int attempt = 0; attempt < 256; ++attempt) {
    const Tensor map = blob_map(16, 16, rng);
    const AnchorRegion region = anchor_region(map, gamma);
    const bool clamped = region.clamped[0] || region.clamped[1] || region.clamped[2] || region.clamped[3];
    if (region.used_fallback || clamped || region.moments.sigma_x < 0.05 || region.moments.sigma_y < 0.05) {
      continue;
    }
    const Tensor proj = random_projection(4, rng);
    return check_leaf([gamma](const Var& m) { return anchor_region_op(m, gamma).coords; }, map, proj);
  }
  throw NumericError("anchor gradient check could not draw an interior window");
}

double roi_pool_round(Rng& rng) {
  const Tensor features = shuffled_linspace({2, 8, 8}, 0.1, 0.9, rng);
  Rect region;
  region.x_min = rng.uniform(0.0, 2.5);
  region.y_min = rng.uniform(0.0, 2.5);
  region.x_max = region.x_min + rng.uniform(3.0, 5.0);
  region.y_max = region.y_min + rng.uniform(3.0, 5.0);
  const Tensor proj = random_projection(static_cast<std::size_t>(2 * 3 * 3), rng);
  return check_leaf([&region](const Var& f) { return roi_pool(f, region, 1, 3); }, features, proj);
}

double bce_round(Rng& rng) {
  const Tensor logits = random_tensor({12}, -2.0, 2.0, rng);
  Tensor target({12});
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = rng.coin() ? 1.0 : 0.0;
  const Tensor proj({1}, {1.0});
  return check_leaf([&target](const Var& z) { return bce_loss_op(sigmoid(z), target); }, logits, proj);
}

}  // namespace

std::vector<OpCheckRow> run_gradient_suite(std::uint64_t seed, int rounds, double tolerance) {
  struct Entry {
    const char* name;
    std::function<double(Rng&)> round;
  };
  const Entry entries[] = {
      {"soft_binarize", [](Rng& r) { return soft_binarize_round(r, 0.01); }},
      {"anchor_region", [](Rng& r) { return anchor_round(r, 3.0); }},
      {"conv2d", [](Rng& r) { return conv2d_round(r, Padding::kSame); }},
      {"conv2d_valid", [](Rng& r) { return conv2d_round(r, Padding::kValid); }},
      {"conv_transpose2d", [](Rng& r) { return conv_transpose_round(r); }},
      {"maxpool2d", [](Rng& r) { return maxpool_round(r); }},
      {"upsample_nearest", [](Rng& r) { return upsample_round(r); }},
      {"concat_channels", [](Rng& r) { return concat_round(r); }},
      {"fully_connected", [](Rng& r) { return fc_round(r); }},
      {"relu", [](Rng& r) { return relu_round(r); }},
      {"sigmoid", [](Rng& r) { return sigmoid_round(r); }},
      {"roi_pool", [](Rng& r) { return roi_pool_round(r); }},
      {"bce_with_logits", [](Rng& r) { return bce_round(r); }},
  };

  std::vector<OpCheckRow> rows;
  std::uint64_t salt = 0;
  for (const Entry& e : entries) {
    Rng rng(seed ^ (0x100000001b3ull * ++salt));
    OpCheckRow row;
    row.op = e.name;
    for (int r = 0; r < rounds; ++r) row.max_rel_err = std::max(row.max_rel_err, e.round(rng));
    row.pass = row.max_rel_err < tolerance;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cropforge
