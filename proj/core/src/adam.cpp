#include "cfbench/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cfb {

AdamState AdamState::for_params(const std::vector<Tensor>& params, float lr, float beta1,
                                float beta2, float eps) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.push_back(Tensor::zeros(p.shape));
    s.v.push_back(Tensor::zeros(p.shape));
  }
  return s;
}

void AdamState::update(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size() || params.size() != m.size())
    throw std::invalid_argument("adam: parameter/gradient/state count mismatch");
  ++step_count;
  const double bc1 = 1.0 - std::pow(static_cast<double>(beta1), static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(static_cast<double>(beta2), static_cast<double>(step_count));
  for (size_t t = 0; t < params.size(); ++t) {
    Tensor& p = params[t];
    const Tensor& g = grads[t];
    require_same_shape(p, g, "adam");
    Tensor& mt = m[t];
    Tensor& vt = v[t];
    for (std::int64_t i = 0; i < p.size(); ++i) {
      mt[i] = beta1 * mt[i] + (1.0f - beta1) * g[i];
      vt[i] = beta2 * vt[i] + (1.0f - beta2) * g[i] * g[i];
      const float mhat = static_cast<float>(mt[i] / bc1);
      const float vhat = static_cast<float>(vt[i] / bc2);
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void adam_update(Tensor& params, const Tensor& grad, AdamState& state) {
  std::vector<Tensor> p{std::move(params)};
  std::vector<Tensor> g{grad};
  state.update(p, g);
  params = std::move(p[0]);
}

}  // namespace cfb
