#pragma once

#include <array>

#include "cfbench/tensor.hpp"

namespace cfb {

/// Anything the attacks can query: two logits and the gradient of the
/// logit margin with respect to the input.
class LogitModel {
 public:
  virtual ~LogitModel() = default;

  virtual std::array<float, 2> logits(const Tensor& x) const = 0;

  /// Returns z_{1-i} - z_i for source label i and writes its gradient
  /// with respect to x into `grad` (same shape as x).
  virtual float margin_with_grad(const Tensor& x, int source_label, Tensor& grad) const = 0;
};

/// z_{1-i} - z_i.
inline float margin(const std::array<float, 2>& z, int source_label) {
  return z[1 - source_label] - z[source_label];
}

/// Strict inequality: margin must exceed c.
inline bool is_adversarial(const std::array<float, 2>& z, int source_label, float c) {
  return margin(z, source_label) > c;
}

}  // namespace cfb
