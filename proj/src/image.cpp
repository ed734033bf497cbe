#include "cropforge/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Tensor from_interleaved(const std::vector<unsigned char>& bytes, int channels, int h, int w) {
  Tensor img({channels, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < channels; ++c) {
      img[static_cast<std::size_t>(c) * plane + p] = bytes[p * channels + c] / 255.0;
    }
  }
  return img;
}

Tensor load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG channel count " + std::to_string(channels) + " in " + path);
  }

  std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * channels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return from_interleaved(bytes, channels, h, w);
}

Tensor load_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image: " + path);
  std::string magic;
  is >> magic;
  if (magic != "P5" && magic != "P2") throw IoError("unsupported PGM magic '" + magic + "' in " + path);

  auto next_int = [&is, &path]() {
    // Skip whitespace and '#' comment lines between header fields.
    while (true) {
      const int c = is.peek();
      if (c == '#') {
        std::string line;
        std::getline(is, line);
      } else if (std::isspace(c)) {
        is.get();
      } else {
        break;
      }
    }
    long v = -1;
    is >> v;
    if (!is || v < 0) throw IoError("malformed PGM header in " + path);
    return v;
  };

  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw IoError("unsupported PGM dimensions in " + path);

  Tensor img({1, static_cast<int>(h), static_cast<int>(w)});
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (magic == "P5") {
    is.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(n);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (!is) throw IoError("truncated PGM payload in " + path);
    for (std::size_t i = 0; i < n; ++i) img[i] = bytes[i] / static_cast<double>(maxval);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long v;
      is >> v;
      if (!is) throw IoError("truncated PGM payload in " + path);
      img[i] = v / static_cast<double>(maxval);
    }
  }
  return img;
}

}  // namespace

Tensor load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image: " + path);
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (!png_sig_cmp(sig, 0, 8)) return load_png(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2')) return load_pgm(path);
  throw IoError("unrecognized image format: " + path);
}

void save_image_png(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw ShapeError("save_image_png expects [1|3,H,W], got " + image.shape_str());
  }
  const int channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<unsigned char> bytes(plane * channels);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < channels; ++c) {
      const double v = std::clamp(image[static_cast<std::size_t>(c) * plane + p], 0.0, 1.0);
      bytes[p * channels + c] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open image for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * w * channels;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor to_grayscale(const Tensor& image) {
  if (image.rank() != 3) throw ShapeError("to_grayscale expects [C,H,W], got " + image.shape_str());
  if (image.dim(0) == 1) return image;
  if (image.dim(0) != 3) throw ShapeError("to_grayscale expects 1 or 3 channels");
  const int h = image.dim(1), w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  Tensor out({1, h, w});
  const double* r = image.data();
  const double* g = r + plane;
  const double* b = g + plane;
  for (std::size_t i = 0; i < plane; ++i) out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

Tensor expand_channels(const Tensor& image, int channels) {
  if (image.dim(0) == channels) return image;
  if (image.dim(0) != 1) throw ShapeError("expand_channels expects a grayscale source");
  Tensor out({channels, image.dim(1), image.dim(2)});
  const std::size_t plane = static_cast<std::size_t>(image.dim(1)) * image.dim(2);
  for (int c = 0; c < channels; ++c) {
    std::copy(image.data(), image.data() + plane, out.data() + static_cast<std::size_t>(c) * plane);
  }
  return out;
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
  if (image.rank() != 3) throw ShapeError("resize_bilinear expects [C,H,W], got " + image.shape_str());
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (out_h == h && out_w == w) return image;
  Tensor out({c, out_h, out_w});
  const double ry = static_cast<double>(h) / out_h;
  const double rx = static_cast<double>(w) / out_w;
  for (int ch = 0; ch < c; ++ch) {
    const double* src = image.data() + static_cast<std::size_t>(ch) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const double sy = (oy + 0.5) * ry - 0.5;
      const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double ty = std::clamp(sy - y0, 0.0, 1.0);
      for (int ox = 0; ox < out_w; ++ox) {
        const double sx = (ox + 0.5) * rx - 0.5;
        const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
        const int x1 = std::min(x0 + 1, w - 1);
        const double tx = std::clamp(sx - x0, 0.0, 1.0);
        const double top = src[static_cast<std::size_t>(y0) * w + x0] * (1.0 - tx) +
                           src[static_cast<std::size_t>(y0) * w + x1] * tx;
        const double bot = src[static_cast<std::size_t>(y1) * w + x0] * (1.0 - tx) +
                           src[static_cast<std::size_t>(y1) * w + x1] * tx;
        dst[static_cast<std::size_t>(oy) * out_w + ox] = top * (1.0 - ty) + bot * ty;
      }
    }
  }
  return out;
}

ResizedImage resize_shorter_side(const Tensor& image, int target, int divisor) {
  if (image.rank() != 3) throw ShapeError("resize_shorter_side expects [C,H,W], got " + image.shape_str());
  const int h = image.dim(1), w = image.dim(2);
  if (h <= 0 || w <= 0) throw ParamError("resize_shorter_side: degenerate image");
  if (target < divisor) throw ParamError("resize_shorter_side: target must be >= the encoder stride");

  int nh, nw;
  if (h <= w) {
    nh = target;
    nw = static_cast<int>(std::floor(static_cast<double>(w) * target / h));
  } else {
    nw = target;
    nh = static_cast<int>(std::floor(static_cast<double>(h) * target / w));
  }
  nh = (nh / divisor) * divisor;
  nw = (nw / divisor) * divisor;
  if (nh <= 0 || nw <= 0) throw ParamError("resize_shorter_side: image too small for the requested stride");

  ResizedImage out;
  out.image = resize_bilinear(image, nh, nw);
  out.scale_x = static_cast<double>(nw) / w;
  out.scale_y = static_cast<double>(nh) / h;
  return out;
}

}  // namespace cropforge
