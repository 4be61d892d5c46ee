#include "cfbench/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cfb {

std::int64_t shape_product(const std::vector<int>& s) {
  std::int64_t p = 1;
  for (int e : s) p *= e;
  return p;
}

Tensor::Tensor(std::vector<int> s)
    : shape(std::move(s)), data(static_cast<size_t>(shape_product(shape)), 0.0f) {
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor extent must be positive, got " + shape_str());
  }
}

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != static_cast<std::int64_t>(data.size())) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str());
  }
}

Tensor Tensor::zeros(std::vector<int> s) { return Tensor(std::move(s)); }

Tensor Tensor::full(std::vector<int> s, float v) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::scalar(float v) { return Tensor({1}, {v}); }

bool Tensor::all_finite() const {
  for (float x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
}

}  // namespace cfb
