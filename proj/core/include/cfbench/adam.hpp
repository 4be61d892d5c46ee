#pragma once

#include <cstdint>
#include <vector>

#include "cfbench/tensor.hpp"

namespace cfb {

/// Bias-corrected Adam over a fixed set of parameter tensors.
struct AdamState {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.99f;
  float eps = 1e-8f;
  std::int64_t step_count = 0;

  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_params(const std::vector<Tensor>& params, float lr = 1e-4f,
                              float beta1 = 0.9f, float beta2 = 0.99f, float eps = 1e-8f);

  /// One update over all parameters; grads[i] must match params[i] in shape.
  void update(std::vector<Tensor>& params, const std::vector<Tensor>& grads);
};

/// Single-tensor convenience wrapper.
void adam_update(Tensor& params, const Tensor& grad, AdamState& state);

}  // namespace cfb
