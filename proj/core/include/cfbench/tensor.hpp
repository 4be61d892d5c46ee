#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace cfb {

/// Dense row-major tensor of 32-bit floats. Carrier for images, weights,
/// activations and gradients.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<float> d);

  static Tensor zeros(std::vector<int> s);
  static Tensor full(std::vector<int> s, float v);
  static Tensor scalar(float v);

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  float& operator[](std::int64_t i) { return data[static_cast<size_t>(i)]; }
  float operator[](std::int64_t i) const { return data[static_cast<size_t>(i)]; }

  // 3-d (c,h,w) and 2-d (h,w) accessors for the common cases.
  float& at3(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  float at3(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  float& at2(int y, int x) { return data[static_cast<size_t>(y) * shape[1] + x]; }
  float at2(int y, int x) const { return data[static_cast<size_t>(y) * shape[1] + x]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;

  std::string shape_str() const;
};

std::int64_t shape_product(const std::vector<int>& s);

/// Throws std::invalid_argument with a message naming both shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace cfb
