#ifndef CROPFORGE_RECT_HPP
#define CROPFORGE_RECT_HPP

#include <algorithm>

namespace cropforge {

// Axis-aligned rectangle in continuous pixel coordinates, canonical
// min/max corner form (x grows right, y grows down).
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool ordered() const { return x_min <= x_max && y_min <= y_max; }

  Rect clamped_to(const Rect& bounds) const {
    Rect r;
    r.x_min = std::clamp(x_min, bounds.x_min, bounds.x_max);
    r.y_min = std::clamp(y_min, bounds.y_min, bounds.y_max);
    r.x_max = std::clamp(x_max, bounds.x_min, bounds.x_max);
    r.y_max = std::clamp(y_max, bounds.y_min, bounds.y_max);
    return r;
  }

  Rect scaled(double sx, double sy) const { return {x_min * sx, y_min * sy, x_max * sx, y_max * sy}; }

  bool operator==(const Rect&) const = default;
};

inline Rect image_bounds(double width, double height) { return {0.0, 0.0, width, height}; }

}  // namespace cropforge

#endif  // CROPFORGE_RECT_HPP
