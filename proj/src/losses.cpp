#include "cropforge/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

inline double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

double bce_loss(const Tensor& predicted, const Tensor& target) {
  if (!predicted.same_shape(target)) {
    throw ShapeError("bce_loss shape mismatch: " + predicted.shape_str() + " vs " + target.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = clamp_prob(predicted[i]);
    const double t = target[i];
    acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return acc;
}

Var bce_loss_op(const Var& predicted, const Tensor& target) {
  const double value = bce_loss(predicted.value(), target);
  Var vp = predicted;
  Tensor tgt = target;
  return make_op(Tensor({1}, {value}), {predicted}, [vp, tgt](Node& n) {
    if (!vp.requires_grad()) return;
    const double g = n.tensor.grad()[0];
    const double* p = vp.value().data();
    double* gin = vp.value().ensure_grad().data();
    for (std::size_t i = 0; i < vp.size(); ++i) {
      const double pc = clamp_prob(p[i]);
      // d/dp of -[t log p + (1-t) log(1-p)] = (p - t) / (p (1-p)); through a
      // sigmoid this collapses to (p - t).
      gin[i] += g * (pc - tgt[i]) / (pc * (1.0 - pc));
    }
  });
}

double offset_l2_loss(const OffsetCoefficients& predicted, const OffsetCoefficients& target) {
  const double d0 = predicted.alpha_t - target.alpha_t;
  const double d1 = predicted.alpha_b - target.alpha_b;
  const double d2 = predicted.beta_t - target.beta_t;
  const double d3 = predicted.beta_b - target.beta_b;
  return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
}

LossReport total_loss(double saliency_loss, double offset_loss, double lambda) {
  if (lambda < 0.0) throw ParamError("total_loss: lambda must be >= 0");
  LossReport r;
  r.saliency_loss = saliency_loss;
  r.offset_loss = offset_loss;
  r.lambda = lambda;
  r.total = saliency_loss + lambda * offset_loss;
  return r;
}

double iou(const Rect& a, const Rect& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double bde(const Rect& a, const Rect& b, int image_w, int image_h) {
  if (image_w <= 0 || image_h <= 0) throw ParamError("bde: image dims must be positive");
  const double w = image_w, h = image_h;
  return (std::fabs(a.x_min - b.x_min) / w + std::fabs(a.x_max - b.x_max) / w + std::fabs(a.y_min - b.y_min) / h +
          std::fabs(a.y_max - b.y_max) / h) /
         4.0;
}

}  // namespace cropforge
