#ifndef CROPFORGE_CROP_LAYERS_HPP
#define CROPFORGE_CROP_LAYERS_HPP

#include <array>

#include "cropforge/autodiff.hpp"
#include "cropforge/rect.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

// Saliency maps are rank-2 [H,W] tensors with values in [0,1]; i indexes the
// column (x) and j the row (y), both zero-based.

// Raw spatial moments and the derived Gaussian-window statistics of a
// saliency map. Centroid and deviations are only meaningful when m00 > 0.
struct Moments {
  double m00 = 0.0, m10 = 0.0, m01 = 0.0, m20 = 0.0, m02 = 0.0;
  double cx = 0.0, cy = 0.0;
  double sigma_x = 0.0, sigma_y = 0.0;
  bool valid() const { return m00 > 0.0; }
};

// rho(x; sigma) = x^2 / (x^2 + sigma^2), applied elementwise. Pushes saliency
// values toward {0,1} while staying differentiable; sigma must be positive.
double soft_binarize_value(double x, double sigma);
Tensor soft_binarize_map(const Tensor& map, double sigma);
// Graph version; d rho / d x = 2 x sigma^2 / (x^2 + sigma^2)^2.
Var soft_binarize(const Var& map, double sigma);

// Single-pass accumulation in row-major order (j outer, i inner); the order
// is part of the contract so independent reimplementations can match
// bitwise. cx, cy, sigma_x, sigma_y are filled only when m00 > 0, with the
// variances clamped at zero before the square root.
Moments compute_moments(const Tensor& map);

inline constexpr double kAnchorActivationFraction = 1e-3;  // of H*W
inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kDefaultFallbackFraction = 0.70;

struct AnchorRegion {
  Rect rect;
  Moments moments;
  bool used_fallback = false;
  // Per coordinate (x_min, y_min, x_max, y_max): raw corner fell outside the
  // image and was clamped. Clamped coordinates receive zero gradient.
  std::array<bool, 4> clamped{false, false, false, false};
};

// Gaussian-like window around the saliency mass: corners (cx -+ gamma
// sigma_x, cy -+ gamma sigma_y), clamped to [0,W]x[0,H]. When total mass
// m00 < 1e-3 * H * W the centered fallback rectangle is returned instead,
// with sides sqrt(fallback_fraction) of the image sides so the covered area
// equals fallback_fraction.
AnchorRegion anchor_region(const Tensor& map, double gamma, double fallback_fraction = kDefaultFallbackFraction);

// Gradient of the four anchor coordinates w.r.t. every map entry:
//   d cx / d S_ij     = i / M00 - M10 / M00^2
//   d sigma_x / d S_ij = (i^2/M00 - M20/M00^2 - 2 cx d cx/d S_ij) / (2 sigma_x)
// and the max corner adds +gamma times the sigma term, the min corner
// -gamma. upstream is ordered (x_min, y_min, x_max, y_max); clamped
// coordinates must already be zeroed by the caller via `clamped`. When a
// deviation is below the 1e-6 floor its sigma term saturates to zero.
// Requires a moments-path anchor (m00 > 0).
Tensor anchor_backward(const Tensor& map, const Moments& moments, const std::array<double, 4>& upstream,
                       double gamma, const std::array<bool, 4>& clamped = {false, false, false, false});

struct AnchorOp {
  Var coords;  // [4] = (x_min, y_min, x_max, y_max)
  AnchorRegion region;
};

// Graph version of anchor_region: coords carry gradients back into the map
// via anchor_backward. Fallback anchors are constants (no gradient path).
AnchorOp anchor_region_op(const Var& map, double gamma, double fallback_fraction = kDefaultFallbackFraction);

// Fixed-grid max pooling of `features` [C,h,w] restricted to `region`
// (given in input-image coordinates; divided by `stride` to reach feature
// space). Cell boundaries are evenly spaced reals rounded outward, each cell
// max-pooled with first-occurrence tie-breaking. A region that collapses to
// zero size expands to the nearest single feature cell. Region coordinates
// are non-differentiable inputs; gradients flow to the pooled feature values
// only.
Var roi_pool(const Var& features, const Rect& region, int stride, int grid);

}  // namespace cropforge

#endif  // CROPFORGE_CROP_LAYERS_HPP
