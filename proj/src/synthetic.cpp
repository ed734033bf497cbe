#include "cropforge/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "cropforge/errors.hpp"
#include "cropforge/rng.hpp"

namespace cropforge {

namespace {

struct Blob {
  bool ellipse;
  double cx, cy, rx, ry;  // center and half-axes, pixel coords
  double intensity;
};

void rasterize(const Blob& b, Tensor& image, Tensor& mask, int size) {
  const int j0 = std::max(0, static_cast<int>(std::floor(b.cy - b.ry)) - 1);
  const int j1 = std::min(size - 1, static_cast<int>(std::ceil(b.cy + b.ry)) + 1);
  const int i0 = std::max(0, static_cast<int>(std::floor(b.cx - b.rx)) - 1);
  const int i1 = std::min(size - 1, static_cast<int>(std::ceil(b.cx + b.rx)) + 1);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double px = i + 0.5, py = j + 0.5;
      bool inside;
      if (b.ellipse) {
        const double nx = (px - b.cx) / b.rx, ny = (py - b.cy) / b.ry;
        inside = nx * nx + ny * ny <= 1.0;
      } else {
        inside = std::fabs(px - b.cx) <= b.rx && std::fabs(py - b.cy) <= b.ry;
      }
      if (inside) {
        const std::size_t at = static_cast<std::size_t>(j) * size + i;
        image[at] = b.intensity;
        mask[at] = 1.0;
      }
    }
  }
}

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

}  // namespace

std::vector<SyntheticSample> generate_synthetic(int count, int image_size, std::uint64_t seed, double margin) {
  if (count < 1) throw ParamError("generate_synthetic: count must be >= 1");
  if (image_size < 8) throw ParamError("generate_synthetic: image_size must be >= 8");
  if (margin < 0.0) throw ParamError("generate_synthetic: margin must be >= 0");

  Rng rng(seed);
  std::vector<SyntheticSample> samples;
  samples.reserve(static_cast<std::size_t>(count));

  for (int n = 0; n < count; ++n) {
    SyntheticSample s;
    s.id = sample_id(n);
    s.image = Tensor({1, image_size, image_size});
    s.saliency = Tensor({image_size, image_size});

    // Low-amplitude noise floor keeps the background clearly below any
    // object intensity.
    for (std::size_t i = 0; i < s.image.size(); ++i) s.image[i] = rng.uniform(0.03, 0.18);

    // Mostly single rectangles: the moment window oversizes those by a fixed
    // ratio, which is exactly the correction the offset head has to learn.
    // Ellipses and two-object scenes keep the task from degenerating.
    const int objects = rng.coin(0.25) ? 2 : 1;
    for (int o = 0; o < objects; ++o) {
      Blob b;
      b.ellipse = rng.coin(0.15);
      b.rx = rng.uniform(0.22, 0.34) * image_size / 2.0;
      b.ry = rng.uniform(0.22, 0.34) * image_size / 2.0;
      b.cx = rng.uniform(b.rx, image_size - b.rx);
      b.cy = rng.uniform(b.ry, image_size - b.ry);
      b.intensity = rng.uniform(0.85, 1.0);
      // View s.image's single channel as the same grid as the mask.
      rasterize(b, s.image, s.saliency, image_size);
    }

    // Object bounding box from the mask, in pixel-extent coordinates.
    int min_i = image_size, max_i = -1, min_j = image_size, max_j = -1;
    for (int j = 0; j < image_size; ++j) {
      for (int i = 0; i < image_size; ++i) {
        if (s.saliency[static_cast<std::size_t>(j) * image_size + i] > 0.0) {
          min_i = std::min(min_i, i);
          max_i = std::max(max_i, i);
          min_j = std::min(min_j, j);
          max_j = std::max(max_j, j);
        }
      }
    }

    Rect box{static_cast<double>(min_i), static_cast<double>(min_j), static_cast<double>(max_i + 1),
             static_cast<double>(max_j + 1)};
    const double mx = margin * box.width(), my = margin * box.height();
    s.crop = Rect{box.x_min - mx, box.y_min - my, box.x_max + mx, box.y_max + my}.clamped_to(
        image_bounds(image_size, image_size));
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace cropforge
