#ifndef CROPFORGE_OFFSETS_HPP
#define CROPFORGE_OFFSETS_HPP

#include "cropforge/autodiff.hpp"
#include "cropforge/rect.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

// The four regression targets: edge displacements between the anchor and the
// aesthetic rectangle, expressed as fractions of the aesthetic rect's height
// (alpha) and width (beta). t is the top/left edge, b the bottom/right.
struct OffsetCoefficients {
  double alpha_t = 0.0;
  double alpha_b = 0.0;
  double beta_t = 0.0;
  double beta_b = 0.0;

  bool operator==(const OffsetCoefficients&) const = default;
};

// Keeps decode finite when a regression head emits alpha_t + alpha_b >= 1;
// bounds the output at 20x the anchor size.
inline constexpr double kDecodeDenominatorFloor = 0.05;

// alpha_t = (y^s_min - y^a_min) / h^a, alpha_b = (y^a_max - y^s_max) / h^a,
// beta likewise on x. Throws GeometryError when the aesthetic rect has no
// area.
OffsetCoefficients encode_offsets(const Rect& anchor, const Rect& aesthetic);

// Inverse map: h^a = (y^s_max - y^s_min) / (1 - alpha_t - alpha_b) with the
// denominator clamped at kDecodeDenominatorFloor, then corners displaced by
// the coefficient fractions. Throws GeometryError on a zero-area anchor.
Rect decode_rect(const Rect& anchor, const OffsetCoefficients& coeffs);
// Inference variant: result clamped to the image bounds.
Rect decode_rect(const Rect& anchor, const OffsetCoefficients& coeffs, const Rect& bounds);

// Supervision recipe for high-aesthetic images: anchor from the map's
// Gaussian window, aesthetic rect = the full image (0,0,w,h).
OffsetCoefficients ground_truth_offsets(const Tensor& map, int image_w, int image_h, double gamma);

// Graph version of encode_offsets over anchor coordinates
// (x_min,y_min,x_max,y_max); the aesthetic rect is a constant. Output order
// is (alpha_t, alpha_b, beta_t, beta_b).
Var encode_offsets_op(const Var& anchor_coords, const Rect& aesthetic);

inline Tensor offsets_tensor(const OffsetCoefficients& o) {
  return Tensor({4}, {o.alpha_t, o.alpha_b, o.beta_t, o.beta_b});
}

inline OffsetCoefficients offsets_from_tensor(const Tensor& t) {
  return {t[0], t[1], t[2], t[3]};
}

}  // namespace cropforge

#endif  // CROPFORGE_OFFSETS_HPP
