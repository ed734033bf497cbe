#ifndef CROPFORGE_LOSSES_HPP
#define CROPFORGE_LOSSES_HPP

#include "cropforge/autodiff.hpp"
#include "cropforge/offsets.hpp"
#include "cropforge/rect.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

struct LossReport {
  double saliency_loss = 0.0;
  double offset_loss = 0.0;
  double lambda = 1.0;
  double total = 0.0;
};

// Probabilities are clamped to [1e-7, 1-1e-7] before the logs.
inline constexpr double kProbClamp = 1e-7;

// Pixel-summed binary cross-entropy: sum over pixels of
// -[t log p + (1-t) log(1-p)]. Chained through a sigmoid the gradient
// w.r.t. the logit is exactly (p - t).
double bce_loss(const Tensor& predicted, const Tensor& target);
// Graph version over the predicted (post-sigmoid) map; target is constant.
Var bce_loss_op(const Var& predicted, const Tensor& target);

// Squared Euclidean norm over the four coefficients.
double offset_l2_loss(const OffsetCoefficients& predicted, const OffsetCoefficients& target);

LossReport total_loss(double saliency_loss, double offset_loss, double lambda);

// Intersection over union of two rectangles; 0 when disjoint or when both
// have zero area.
double iou(const Rect& a, const Rect& b);

// Mean absolute displacement of the four edges, each normalized by the image
// dimension along its axis.
double bde(const Rect& a, const Rect& b, int image_w, int image_h);

}  // namespace cropforge

#endif  // CROPFORGE_LOSSES_HPP
