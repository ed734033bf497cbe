#include "cropforge/crop_layers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

void check_map(const Tensor& map, const char* what) {
  if (map.rank() != 2) throw ShapeError(std::string(what) + " expects a rank-2 [H,W] map, got " + map.shape_str());
}

}  // namespace

double soft_binarize_value(double x, double sigma) {
  return (x * x) / (x * x + sigma * sigma);
}

Tensor soft_binarize_map(const Tensor& map, double sigma) {
  if (!(sigma > 0.0)) throw ParamError("soft_binarize: sigma must be positive");
  Tensor out(map.shape());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = soft_binarize_value(map[i], sigma);
  return out;
}

Var soft_binarize(const Var& map, double sigma) {
  if (!(sigma > 0.0)) throw ParamError("soft_binarize: sigma must be positive");
  Tensor out(map.shape());
  const double* x = map.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = soft_binarize_value(x[i], sigma);
  Var vm = map;
  const double s2 = sigma * sigma;
  return make_op(std::move(out), {map}, [vm, s2](Node& n) {
    if (!vm.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    const double* x = vm.value().data();
    double* gin = vm.value().ensure_grad().data();
    for (std::size_t i = 0; i < n.tensor.size(); ++i) {
      const double d = x[i] * x[i] + s2;
      gin[i] += g[i] * 2.0 * x[i] * s2 / (d * d);
    }
  });
}

Moments compute_moments(const Tensor& map) {
  check_map(map, "compute_moments");
  const int h = map.dim(0), w = map.dim(1);
  Moments m;
  const double* s = map.data();
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const double v = s[static_cast<std::size_t>(j) * w + i];
      m.m00 += v;
      m.m10 += i * v;
      m.m01 += j * v;
      m.m20 += static_cast<double>(i) * i * v;
      m.m02 += static_cast<double>(j) * j * v;
    }
  }
  if (m.valid()) {
    m.cx = m.m10 / m.m00;
    m.cy = m.m01 / m.m00;
    m.sigma_x = std::sqrt(std::max(0.0, m.m20 / m.m00 - m.cx * m.cx));
    m.sigma_y = std::sqrt(std::max(0.0, m.m02 / m.m00 - m.cy * m.cy));
  }
  return m;
}

AnchorRegion anchor_region(const Tensor& map, double gamma, double fallback_fraction) {
  check_map(map, "anchor_region");
  if (!(gamma > 0.0)) throw ParamError("anchor_region: gamma must be positive");
  if (!(fallback_fraction > 0.0 && fallback_fraction <= 1.0)) {
    throw ParamError("anchor_region: fallback_fraction must lie in (0,1]");
  }
  const double h = map.dim(0), w = map.dim(1);

  AnchorRegion out;
  out.moments = compute_moments(map);
  if (out.moments.m00 < kAnchorActivationFraction * h * w) {
    // No usable fixation mass: centered window whose area covers
    // fallback_fraction of the image.
    const double side = std::sqrt(fallback_fraction);
    out.rect = {w * (1.0 - side) / 2.0, h * (1.0 - side) / 2.0, w * (1.0 + side) / 2.0, h * (1.0 + side) / 2.0};
    out.used_fallback = true;
    return out;
  }

  const Moments& m = out.moments;
  const double raw[4] = {m.cx - gamma * m.sigma_x, m.cy - gamma * m.sigma_y, m.cx + gamma * m.sigma_x,
                         m.cy + gamma * m.sigma_y};
  const double lo[4] = {0.0, 0.0, 0.0, 0.0};
  const double hi[4] = {w, h, w, h};
  double clamped[4];
  for (int i = 0; i < 4; ++i) {
    clamped[i] = std::clamp(raw[i], lo[i], hi[i]);
    out.clamped[static_cast<std::size_t>(i)] = clamped[i] != raw[i];
  }
  out.rect = {clamped[0], clamped[1], clamped[2], clamped[3]};
  return out;
}

Tensor anchor_backward(const Tensor& map, const Moments& m, const std::array<double, 4>& upstream, double gamma,
                       const std::array<bool, 4>& clamped) {
  check_map(map, "anchor_backward");
  if (!m.valid()) throw ParamError("anchor_backward requires a moments-path anchor (m00 > 0)");
  const int h = map.dim(0), w = map.dim(1);

  const double gx_min = clamped[0] ? 0.0 : upstream[0];
  const double gy_min = clamped[1] ? 0.0 : upstream[1];
  const double gx_max = clamped[2] ? 0.0 : upstream[2];
  const double gy_max = clamped[3] ? 0.0 : upstream[3];

  // Centroid and deviation terms factor per axis:
  //   d corner / d S = d c / d S +- gamma * d sigma / d S.
  const double gcx = gx_min + gx_max;
  const double gcy = gy_min + gy_max;
  const double gsx = gamma * (gx_max - gx_min);
  const double gsy = gamma * (gy_max - gy_min);

  const double inv_m00 = 1.0 / m.m00;
  const double m10_term = m.m10 * inv_m00 * inv_m00;
  const double m01_term = m.m01 * inv_m00 * inv_m00;
  const double m20_term = m.m20 * inv_m00 * inv_m00;
  const double m02_term = m.m02 * inv_m00 * inv_m00;
  const bool sx_ok = m.sigma_x > kSigmaFloor;
  const bool sy_ok = m.sigma_y > kSigmaFloor;
  const double inv_2sx = sx_ok ? 1.0 / (2.0 * m.sigma_x) : 0.0;
  const double inv_2sy = sy_ok ? 1.0 / (2.0 * m.sigma_y) : 0.0;

  Tensor grad(map.shape());
  double* g = grad.data();
  for (int j = 0; j < h; ++j) {
    const double dcy = j * inv_m00 - m01_term;
    const double dsy = sy_ok ? (static_cast<double>(j) * j * inv_m00 - m02_term - 2.0 * m.cy * dcy) * inv_2sy : 0.0;
    const double ypart = gcy * dcy + gsy * dsy;
    double* grow = g + static_cast<std::size_t>(j) * w;
    for (int i = 0; i < w; ++i) {
      const double dcx = i * inv_m00 - m10_term;
      const double dsx = sx_ok ? (static_cast<double>(i) * i * inv_m00 - m20_term - 2.0 * m.cx * dcx) * inv_2sx : 0.0;
      grow[i] = gcx * dcx + gsx * dsx + ypart;
    }
  }
  return grad;
}

AnchorOp anchor_region_op(const Var& map, double gamma, double fallback_fraction) {
  AnchorOp result;
  result.region = anchor_region(map.value(), gamma, fallback_fraction);
  const Rect& r = result.region.rect;
  Tensor coords({4}, {r.x_min, r.y_min, r.x_max, r.y_max});
  if (result.region.used_fallback) {
    // Constant window; the loss cannot move it.
    result.coords = Var(std::move(coords));
    return result;
  }
  Var vm = map;
  const AnchorRegion region = result.region;
  result.coords = make_op(std::move(coords), {map}, [vm, region, gamma](Node& n) {
    if (!vm.requires_grad()) return;
    const auto& g = n.tensor.grad();
    const Tensor gmap = anchor_backward(vm.value(), region.moments, {g[0], g[1], g[2], g[3]}, gamma, region.clamped);
    double* gin = vm.value().ensure_grad().data();
    for (std::size_t i = 0; i < gmap.size(); ++i) gin[i] += gmap[i];
  });
  return result;
}

Var roi_pool(const Var& features, const Rect& region, int stride, int grid) {
  if (features.value().rank() != 3) {
    throw ShapeError("roi_pool expects [C,h,w] features, got " + features.value().shape_str());
  }
  if (stride < 1 || grid < 1) throw ParamError("roi_pool: stride and grid must be >= 1");
  const int c = features.shape()[0], h = features.shape()[1], w = features.shape()[2];

  // Map the region into feature space and clamp to the feature extent.
  double fx0 = std::clamp(region.x_min / stride, 0.0, static_cast<double>(w));
  double fx1 = std::clamp(region.x_max / stride, 0.0, static_cast<double>(w));
  double fy0 = std::clamp(region.y_min / stride, 0.0, static_cast<double>(h));
  double fy1 = std::clamp(region.y_max / stride, 0.0, static_cast<double>(h));
  if (fx1 - fx0 < 1e-12) {
    const double cx = std::clamp(std::floor((fx0 + fx1) / 2.0), 0.0, static_cast<double>(w - 1));
    fx0 = cx;
    fx1 = cx + 1.0;
  }
  if (fy1 - fy0 < 1e-12) {
    const double cy = std::clamp(std::floor((fy0 + fy1) / 2.0), 0.0, static_cast<double>(h - 1));
    fy0 = cy;
    fy1 = cy + 1.0;
  }

  auto cell_span = [grid](double lo, double hi, int g, int limit) {
    const double step = (hi - lo) / grid;
    int s = static_cast<int>(std::floor(lo + step * g));
    int e = static_cast<int>(std::ceil(lo + step * (g + 1)));
    s = std::clamp(s, 0, limit - 1);
    e = std::clamp(e, s + 1, limit);
    return std::pair<int, int>{s, e};
  };

  Tensor out({c, grid, grid});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  {
    const double* f = features.value().data();
    double* o = out.data();
    std::size_t oi = 0;
    for (int ch = 0; ch < c; ++ch) {
      const double* fchan = f + static_cast<std::size_t>(ch) * h * w;
      for (int gy = 0; gy < grid; ++gy) {
        const auto [ys, ye] = cell_span(fy0, fy1, gy, h);
        for (int gx = 0; gx < grid; ++gx, ++oi) {
          const auto [xs, xe] = cell_span(fx0, fx1, gx, w);
          std::size_t best = static_cast<std::size_t>(ys) * w + xs;
          double bv = fchan[best];
          for (int y = ys; y < ye; ++y) {
            const double* frow = fchan + static_cast<std::size_t>(y) * w;
            for (int x = xs; x < xe; ++x) {
              if (frow[x] > bv) {
                bv = frow[x];
                best = static_cast<std::size_t>(y) * w + x;
              }
            }
          }
          o[oi] = bv;
          (*argmax)[oi] = static_cast<std::size_t>(ch) * h * w + best;
        }
      }
    }
  }
  Var vf = features;
  return make_op(std::move(out), {features}, [vf, argmax](Node& n) {
    if (!vf.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    double* gin = vf.value().ensure_grad().data();
    for (std::size_t i = 0; i < argmax->size(); ++i) gin[(*argmax)[i]] += g[i];
  });
}

}  // namespace cropforge
