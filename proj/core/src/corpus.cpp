#include "cfbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include "cfbench/pgm.hpp"
#include "cfbench/rng.hpp"

namespace cfb {

namespace {

struct Octave {
  int cell;     // grid spacing in pixels; 1 = per-pixel noise
  double amp;
};

// Value noise: random lattice values, bilinear interpolation between them.
void add_value_noise(GrayImage& img, std::mt19937_64& rng, const Octave& oc) {
  if (oc.cell <= 1) {
    for (auto& p : img.pixels) p += static_cast<float>(oc.amp * (uniform01(rng) * 2.0 - 1.0));
    return;
  }
  const int gh = img.height / oc.cell + 2;
  const int gw = img.width / oc.cell + 2;
  std::vector<double> grid(static_cast<size_t>(gh) * gw);
  for (auto& g : grid) g = uniform01(rng) * 2.0 - 1.0;
  for (int y = 0; y < img.height; ++y) {
    const double fy = static_cast<double>(y) / oc.cell;
    const int y0 = static_cast<int>(fy);
    const double wy = fy - y0;
    for (int x = 0; x < img.width; ++x) {
      const double fx = static_cast<double>(x) / oc.cell;
      const int x0 = static_cast<int>(fx);
      const double wx = fx - x0;
      const double v00 = grid[static_cast<size_t>(y0) * gw + x0];
      const double v01 = grid[static_cast<size_t>(y0) * gw + x0 + 1];
      const double v10 = grid[static_cast<size_t>(y0 + 1) * gw + x0];
      const double v11 = grid[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
      const double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
      img.at(y, x) += static_cast<float>(oc.amp * v);
    }
  }
}

std::uint64_t style_stream(const std::string& style) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : style) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

}  // namespace

std::vector<SourceImage> synth_corpus(std::uint64_t seed, int n_images, int extent,
                                      const std::string& style) {
  if (n_images < 1) throw std::invalid_argument("synth_corpus: n_images must be >= 1");
  if (extent < 8) throw std::invalid_argument("synth_corpus: extent must be >= 8");
  if (style != "A" && style != "B")
    throw std::invalid_argument("synth_corpus: unknown style '" + style + "'");

  // Disjoint octave mixes per style; the fine octaves carry the
  // high-frequency trace the manipulations disturb.
  std::vector<Octave> octaves;
  double grad_amp;
  if (style == "A") {
    octaves = {{32, 0.50}, {8, 0.25}, {2, 0.15}, {1, 0.20}};
    grad_amp = 0.40;
  } else {
    octaves = {{48, 0.45}, {12, 0.30}, {4, 0.18}, {1, 0.13}};
    grad_amp = 0.22;
  }

  std::vector<SourceImage> corpus;
  corpus.reserve(static_cast<size_t>(n_images));
  for (int id = 0; id < n_images; ++id) {
    std::mt19937_64 rng(derive_seed(seed ^ style_stream(style), static_cast<std::uint64_t>(id)));
    GrayImage img(extent, extent);
    const double theta = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
    const double gx = std::cos(theta), gy = std::sin(theta);
    for (int y = 0; y < extent; ++y)
      for (int x = 0; x < extent; ++x)
        img.at(y, x) = static_cast<float>(grad_amp * (gx * x + gy * y) / extent);
    for (const auto& oc : octaves) add_value_noise(img, rng, oc);

    float lo = img.pixels[0], hi = img.pixels[0];
    for (float p : img.pixels) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    const float span = hi > lo ? hi - lo : 1.0f;
    for (auto& p : img.pixels) p = (p - lo) / span;

    SourceImage src;
    src.image = quantize8(img);
    src.source_id = id;
    src.origin = SourceImage::Origin::synthetic;
    corpus.push_back(std::move(src));
  }
  return corpus;
}

std::vector<SourceImage> load_corpus(const std::string& dir_path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir_path))
    throw std::runtime_error("load_corpus: not a directory: " + dir_path);

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir_path)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "load_corpus: warning: no PGM files in " << dir_path << "\n";
    return {};
  }

  std::vector<SourceImage> corpus;
  std::string errors;
  for (size_t i = 0; i < files.size(); ++i) {
    try {
      SourceImage src;
      src.image = load_pgm(files[i]);
      src.source_id = static_cast<int>(corpus.size());
      src.origin = SourceImage::Origin::file;
      corpus.push_back(std::move(src));
    } catch (const std::exception& e) {
      errors += std::string("\n  ") + e.what();
    }
  }
  if (!errors.empty())
    throw std::runtime_error("load_corpus: malformed files in " + dir_path + ":" + errors);
  return corpus;
}

}  // namespace cfb
