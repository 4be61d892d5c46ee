#pragma once

#include <string>
#include <vector>

#include "cfbench/tensor.hpp"

namespace cfb {

/// Grayscale image, pixels in [0,1], row-major. Images loaded from 8-bit
/// files lie on the grid {0, 1/255, ..., 1}.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(int h, int w);
  GrayImage(int h, int w, std::vector<float> px);

  float& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }

  Tensor to_tensor() const;                       // [1,H,W]
  static GrayImage from_tensor(const Tensor& t);  // accepts [1,H,W] or [H,W]
};

/// k x k median with edge replication at the borders; k odd.
GrayImage median_filter(const GrayImage& img, int k);

/// Bilinear downsampling with half-pixel-centered mapping, no prefilter.
/// Output extents are round(extent * factor); factor in (0,1].
GrayImage downsample(const GrayImage& img, double factor);

/// 10*log10(1/MSE) over [0,1] pixels; +infinity when the images are equal.
double psnr(const GrayImage& a, const GrayImage& b);

/// Round every pixel to the nearest multiple of 1/255, ties away from
/// zero, clamped to [0,1]. Idempotent.
GrayImage quantize8(const GrayImage& img);

bool on_8bit_grid(const GrayImage& img);

}  // namespace cfb
