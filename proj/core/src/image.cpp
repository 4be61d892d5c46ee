#include "cfbench/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfb {

GrayImage::GrayImage(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w, 0.0f) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("image extents must be positive");
}

GrayImage::GrayImage(int h, int w, std::vector<float> px) : height(h), width(w), pixels(std::move(px)) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("image extents must be positive");
  if (pixels.size() != static_cast<size_t>(h) * w)
    throw std::invalid_argument("pixel count does not match extents");
}

Tensor GrayImage::to_tensor() const {
  return Tensor({1, height, width}, pixels);
}

GrayImage GrayImage::from_tensor(const Tensor& t) {
  if (t.rank() == 3 && t.dim(0) == 1) return GrayImage(t.dim(1), t.dim(2), t.data);
  if (t.rank() == 2) return GrayImage(t.dim(0), t.dim(1), t.data);
  throw std::invalid_argument("expected [1,H,W] or [H,W] tensor, got " + t.shape_str());
}

GrayImage median_filter(const GrayImage& img, int k) {
  if (k <= 0 || k % 2 == 0)
    throw std::invalid_argument("median_filter: window must be odd and positive, got " +
                                std::to_string(k));
  if (k > std::min(img.height, img.width))
    throw std::invalid_argument("median_filter: window exceeds image extents");
  if (k == 1) return img;

  const int r = k / 2;
  GrayImage out(img.height, img.width);
  std::vector<float> win(static_cast<size_t>(k) * k);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      size_t n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, img.height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, img.width - 1);
          win[n++] = img.at(yy, xx);
        }
      }
      auto mid = win.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(win.begin(), mid, win.begin() + static_cast<std::ptrdiff_t>(n));
      out.at(y, x) = *mid;
    }
  }
  return out;
}

GrayImage downsample(const GrayImage& img, double factor) {
  if (!(factor > 0.0) || factor > 1.0)
    throw std::invalid_argument("downsample: factor must be in (0,1]");
  if (factor == 1.0) return img;
  const int oh = static_cast<int>(std::lround(img.height * factor));
  const int ow = static_cast<int>(std::lround(img.width * factor));
  if (oh < 1 || ow < 1) throw std::invalid_argument("downsample: degenerate output size");

  const double sy = static_cast<double>(img.height) / oh;
  const double sx = static_cast<double>(img.width) / ow;
  GrayImage out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    const int y1 = std::clamp(y0 + 1, 0, img.height - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    for (int x = 0; x < ow; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      const int x1 = std::clamp(x0 + 1, 0, img.width - 1);
      x0 = std::clamp(x0, 0, img.width - 1);
      const double v = (1.0 - wy) * ((1.0 - wx) * img.at(y0, x0) + wx * img.at(y0, x1)) +
                       wy * ((1.0 - wx) * img.at(y1, x0) + wx * img.at(y1, x1));
      out.at(y, x) = static_cast<float>(v);
    }
  }
  return out;
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("psnr: extent mismatch " + std::to_string(a.height) + "x" +
                                std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                                std::to_string(b.width));
  double mse = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

GrayImage quantize8(const GrayImage& img) {
  GrayImage out = img;
  for (auto& p : out.pixels) {
    const double q = std::round(static_cast<double>(p) * 255.0);
    p = static_cast<float>(std::clamp(q, 0.0, 255.0) / 255.0);
  }
  return out;
}

bool on_8bit_grid(const GrayImage& img) {
  for (float p : img.pixels) {
    const double q = std::round(static_cast<double>(p) * 255.0);
    if (q < 0.0 || q > 255.0) return false;
    if (std::abs(p - q / 255.0) > 1e-7) return false;
  }
  return true;
}

}  // namespace cfb
