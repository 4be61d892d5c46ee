#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfbench/image.hpp"

namespace cfb {

struct SourceImage {
  GrayImage image;
  int source_id = 0;
  enum class Origin { synthetic, file } origin = Origin::synthetic;
};

/// Deterministic textured grayscale images: multi-octave value noise
/// blended with a linear gradient, min-max normalized and quantized to
/// the 8-bit grid. Styles "A" and "B" use disjoint octave mixes and
/// independent random streams, emulating two source corpora.
std::vector<SourceImage> synth_corpus(std::uint64_t seed, int n_images, int extent,
                                      const std::string& style);

/// Directory of PGM files, ordered by filename; source_id by ordinal.
/// Malformed files are reported together and abort the load.
std::vector<SourceImage> load_corpus(const std::string& dir_path);

}  // namespace cfb
