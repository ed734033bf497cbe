#ifndef CROPFORGE_SYNTHETIC_HPP
#define CROPFORGE_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cropforge/rect.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

// One generated training/evaluation sample: a grayscale scene of bright
// filled shapes over a dim noisy background, its binary object mask, and the
// margin-expanded object bounding box used as the crop ground truth.
struct SyntheticSample {
  std::string id;
  Tensor image;     // [1,S,S], values in [0,1]
  Tensor saliency;  // [S,S], exactly 0 or 1
  Rect crop;
};

inline constexpr double kDefaultCropMargin = 0.25;  // of box size, per side

// Deterministic scene generator: each sample places 1-2 filled ellipses or
// rectangles with sides between 10% and 40% of the image side, fully inside
// the frame, over low-amplitude uniform noise. gt crop = object bounding box
// expanded by `margin` of its size on every side, clamped to the image.
std::vector<SyntheticSample> generate_synthetic(int count, int image_size, std::uint64_t seed,
                                                double margin = kDefaultCropMargin);

}  // namespace cropforge

#endif  // CROPFORGE_SYNTHETIC_HPP
