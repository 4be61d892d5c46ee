#include "cfbench/pgm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cfb {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("pgm: " + path + ": " + why);
}

// Next whitespace-separated token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_int(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = next_token(in);
  if (tok.empty()) fail(path, std::string("missing ") + what);
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      fail(path, std::string("bad ") + what + " token '" + tok + "'");
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    fail(path, std::string("bad ") + what + " token '" + tok + "'");
  }
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");

  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') fail(path, "bad magic, expected P5");

  const int w = parse_int(in, path, "width");
  const int h = parse_int(in, path, "height");
  const int maxval = parse_int(in, path, "maxval");
  if (w <= 0 || h <= 0) fail(path, "non-positive extents");
  if (maxval != 255) fail(path, "unsupported maxval " + std::to_string(maxval) + ", expected 255");
  // exactly one whitespace byte separates maxval from the payload; it was
  // already consumed by the tokenizer

  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size())
    fail(path, "truncated payload: got " + std::to_string(in.gcount()) + " of " +
                   std::to_string(raw.size()) + " bytes");

  GrayImage img(h, w);
  for (size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

void save_pgm(const GrayImage& img, const std::string& path) {
  if (!on_8bit_grid(img)) fail(path, "pixels not on the 8-bit grid; quantize before saving");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(static_cast<double>(img.pixels[i]) * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failed");
}

}  // namespace cfb
