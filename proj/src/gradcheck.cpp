#include "cropforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

double project(const Var& out, const Tensor* projection) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    acc += out.value()[i] * (projection ? (*projection)[i] : 1.0);
  }
  if (!std::isfinite(acc)) throw NumericError("gradient_check: non-finite forward value");
  return acc;
}

}  // namespace

GradCheckReport gradient_check(const std::function<Var(const Var&)>& op, const Tensor& input, double epsilon,
                               const Tensor* projection) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw ParamError("gradient_check epsilon must lie in [1e-7, 1e-3]");
  }
  if (!input.all_finite()) throw NumericError("gradient_check: non-finite input");

  Var leaf(input, /*requires_grad=*/true);
  Var out = op(leaf);
  if (projection && projection->size() != out.size()) {
    throw ShapeError("gradient_check projection size mismatch");
  }
  Var phi = projection ? weighted_sum(out, *projection) : sum(out);
  backward(phi);
  std::vector<double> analytic = leaf.grad();
  for (double a : analytic) {
    if (!std::isfinite(a)) throw NumericError("gradient_check: non-finite analytical gradient");
  }

  Tensor probe = input;
  GradCheckReport report;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double fp = project(op(Var(probe)), projection);
    probe[i] = saved - epsilon;
    const double fm = project(op(Var(probe)), projection);
    probe[i] = saved;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    if (!std::isfinite(numeric)) throw NumericError("gradient_check: non-finite numerical gradient");
    const double denom = std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
    const double rel = std::fabs(analytic[i] - numeric) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
  }
  return report;
}

Tensor shuffled_linspace(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  // Fisher-Yates with the pinned engine.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(t[i - 1], t[j]);
  }
  return t;
}

Tensor blob_map(int height, int width, Rng& rng) {
  Tensor map({height, width});
  const double sigma = rng.uniform(1.2, 1.8);
  const double cx = width / 2.0 + rng.uniform(-1.5, 1.5);
  const double cy = height / 2.0 + rng.uniform(-1.5, 1.5);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      const double dx = i - cx, dy = j - cy;
      const double blob = 0.9 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      map[static_cast<std::size_t>(j) * width + i] = blob + rng.uniform(0.002, 0.008);
    }
  }
  return map;
}

}  // namespace cropforge
