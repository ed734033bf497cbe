#ifndef CROPFORGE_IMAGE_HPP
#define CROPFORGE_IMAGE_HPP

#include <string>

#include "cropforge/tensor.hpp"

namespace cropforge {

// Images are [C,H,W] tensors with C in {1,3} and values in [0,1].

// Reads a PNG or PGM (P5/P2) file, dispatching on magic bytes. 16-bit,
// palette and alpha PNG variants are folded down to 8-bit gray or RGB.
Tensor load_image(const std::string& path);

// Writes 8-bit grayscale (1 channel) or RGB (3 channels) PNG.
void save_image_png(const std::string& path, const Tensor& image);

Tensor to_grayscale(const Tensor& image);
// Replicates a grayscale image to `channels` (used when a model expects RGB).
Tensor expand_channels(const Tensor& image, int channels);

// Half-pixel-center bilinear resampling to [C,out_h,out_w].
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);

struct ResizedImage {
  Tensor image;
  double scale_x = 1.0;  // resized = original * scale
  double scale_y = 1.0;
};

// Aspect-preserving resize so min(H',W') = target, then both dims floored to
// the nearest multiple of `divisor` (the encoder stride). Returns the
// applied per-axis scales so rectangles can be mapped back to original
// coordinates. Identity (bitwise) when the image already satisfies both
// constraints.
ResizedImage resize_shorter_side(const Tensor& image, int target, int divisor);

}  // namespace cropforge

#endif  // CROPFORGE_IMAGE_HPP
