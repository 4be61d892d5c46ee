#pragma once

#include <string>

#include "cfbench/image.hpp"

namespace cfb {

/// Binary PGM ("P5"), maxval 255. Comment lines starting with '#' are
/// accepted before the maxval token. Throws std::runtime_error with a
/// descriptive message on malformed input.
GrayImage load_pgm(const std::string& path);

/// Pixels must already lie on the 8-bit grid. Writes the canonical
/// header "P5\n<w> <h>\n255\n" so save/load round-trips are byte-exact.
void save_pgm(const GrayImage& img, const std::string& path);

}  // namespace cfb
