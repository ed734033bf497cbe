#include "cropforge/offsets.hpp"

#include <algorithm>

#include "cropforge/crop_layers.hpp"
#include "cropforge/errors.hpp"

namespace cropforge {

OffsetCoefficients encode_offsets(const Rect& anchor, const Rect& aesthetic) {
  const double ha = aesthetic.height();
  const double wa = aesthetic.width();
  if (!(ha > 0.0) || !(wa > 0.0)) throw GeometryError("encode_offsets: aesthetic rect must have positive area");
  OffsetCoefficients o;
  o.alpha_t = (anchor.y_min - aesthetic.y_min) / ha;
  o.alpha_b = (aesthetic.y_max - anchor.y_max) / ha;
  o.beta_t = (anchor.x_min - aesthetic.x_min) / wa;
  o.beta_b = (aesthetic.x_max - anchor.x_max) / wa;
  return o;
}

Rect decode_rect(const Rect& anchor, const OffsetCoefficients& c) {
  const double hs = anchor.height();
  const double ws = anchor.width();
  if (!(hs > 0.0) || !(ws > 0.0)) throw GeometryError("decode_rect: anchor must have positive area");
  const double ha = hs / std::max(1.0 - c.alpha_t - c.alpha_b, kDecodeDenominatorFloor);
  const double wa = ws / std::max(1.0 - c.beta_t - c.beta_b, kDecodeDenominatorFloor);
  return {anchor.x_min - c.beta_t * wa, anchor.y_min - c.alpha_t * ha, anchor.x_max + c.beta_b * wa,
          anchor.y_max + c.alpha_b * ha};
}

Rect decode_rect(const Rect& anchor, const OffsetCoefficients& c, const Rect& bounds) {
  return decode_rect(anchor, c).clamped_to(bounds);
}

OffsetCoefficients ground_truth_offsets(const Tensor& map, int image_w, int image_h, double gamma) {
  const AnchorRegion anchor = anchor_region(map, gamma);
  return encode_offsets(anchor.rect, image_bounds(image_w, image_h));
}

Var encode_offsets_op(const Var& anchor_coords, const Rect& aesthetic) {
  if (anchor_coords.size() != 4) {
    throw ShapeError("encode_offsets_op expects 4 anchor coordinates, got " + anchor_coords.value().shape_str());
  }
  const double ha = aesthetic.height();
  const double wa = aesthetic.width();
  if (!(ha > 0.0) || !(wa > 0.0)) throw GeometryError("encode_offsets_op: aesthetic rect must have positive area");
  const Tensor& s = anchor_coords.value();
  Tensor out({4}, {(s[1] - aesthetic.y_min) / ha, (aesthetic.y_max - s[3]) / ha, (s[0] - aesthetic.x_min) / wa,
                   (aesthetic.x_max - s[2]) / wa});
  Var vs = anchor_coords;
  return make_op(std::move(out), {anchor_coords}, [vs, ha, wa](Node& n) {
    if (!vs.requires_grad()) return;
    const auto& g = n.tensor.grad();
    auto& gs = vs.value().ensure_grad();
    gs[1] += g[0] / ha;   // alpha_t <- y_min
    gs[3] -= g[1] / ha;   // alpha_b <- y_max
    gs[0] += g[2] / wa;   // beta_t  <- x_min
    gs[2] -= g[3] / wa;   // beta_b  <- x_max
  });
}

}  // namespace cropforge
