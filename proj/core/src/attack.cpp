#include "cfbench/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfbench/adam.hpp"
#include "cfbench/parallel.hpp"

namespace cfb {

namespace {

float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

void fill_distortion(AttackResult& r, const Tensor& x0, const Tensor& x) {
  double l2 = 0.0, linf = 0.0;
  for (std::int64_t i = 0; i < x0.size(); ++i) {
    const double d = static_cast<double>(x[i]) - x0[i];
    l2 += d * d;
    linf = std::max(linf, std::abs(d));
  }
  r.l2_distance = std::sqrt(l2);
  r.linf_distance = linf;
  r.psnr_to_original = psnr(GrayImage::from_tensor(x0), GrayImage::from_tensor(x));
}

AttackResult zero_iteration_success(const Tensor& x0, float m) {
  AttackResult r;
  r.success = true;
  r.adversarial = GrayImage::from_tensor(x0);
  r.achieved_margin = m;
  r.iterations_used = 0;
  r.epsilon_used = 0.0f;
  r.psnr_to_original = std::numeric_limits<double>::infinity();
  return r;
}

// Shared I-FGSM / MI-FGSM core; momentum accumulates L1-normalized
// gradients and is reset at the start of every epsilon run.
AttackResult iterative_grid_attack(const LogitModel& model, const GrayImage& patch,
                                   int source_label, const AttackConfig& cfg, bool momentum) {
  cfg.validate();
  const Tensor x0 = patch.to_tensor();
  Tensor g(x0.shape);
  const float m0 = model.margin_with_grad(x0, source_label, g);
  if (m0 > cfg.c) return zero_iteration_success(x0, m0);

  Tensor x(x0.shape), gacc(x0.shape);
  for (int k = 1; k <= cfg.epsilon_grid_size; ++k) {
    const float eps = cfg.max_epsilon * static_cast<float>(k) / cfg.epsilon_grid_size;
    const float step = eps / cfg.max_steps;
    x = x0;
    if (momentum)
      for (auto& v : gacc.data) v = 0.0f;
    float m = m0;
    Tensor cur_g = g;  // gradient at x0 is the same for every epsilon's first step
    for (int t = 1; t <= cfg.max_steps; ++t) {
      if (momentum) {
        double l1 = 0.0;
        for (float v : cur_g.data) l1 += std::abs(v);
        const float inv = l1 > 0.0 ? static_cast<float>(1.0 / l1) : 0.0f;
        for (std::int64_t i = 0; i < gacc.size(); ++i)
          gacc[i] = cfg.mu * gacc[i] + cur_g[i] * inv;
        for (std::int64_t i = 0; i < x.size(); ++i)
          x[i] = std::clamp(x[i] + step * sign_of(gacc[i]), cfg.pixel_lo, cfg.pixel_hi);
      } else {
        for (std::int64_t i = 0; i < x.size(); ++i)
          x[i] = std::clamp(x[i] + step * sign_of(cur_g[i]), cfg.pixel_lo, cfg.pixel_hi);
      }
      m = model.margin_with_grad(x, source_label, cur_g);
      if (m > cfg.c) {
        AttackResult r;
        r.success = true;
        r.adversarial = GrayImage::from_tensor(x);
        r.achieved_margin = m;
        r.iterations_used = t;
        r.epsilon_used = eps;
        fill_distortion(r, x0, x);
        return r;
      }
    }
  }
  AttackResult r;
  r.iterations_used = cfg.max_steps;
  r.epsilon_used = cfg.max_epsilon;
  return r;
}

}  // namespace

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "ifgsm") return Algorithm::IFGSM;
  if (s == "pgd") return Algorithm::PGD;
  if (s == "mifgsm") return Algorithm::MIFGSM;
  if (s == "cw" || s == "cw_l2") return Algorithm::CW_L2;
  throw std::invalid_argument("unknown attack algorithm '" + s + "'");
}

std::string algorithm_to_string(Algorithm a) {
  switch (a) {
    case Algorithm::IFGSM: return "ifgsm";
    case Algorithm::PGD: return "pgd";
    case Algorithm::MIFGSM: return "mifgsm";
    case Algorithm::CW_L2: return "cw_l2";
  }
  return "?";
}

void AttackConfig::validate() const {
  if (c < 0.0f) throw std::invalid_argument("attack: confidence c must be >= 0");
  if (max_epsilon <= 0.0f || epsilon_grid_size < 1 || max_steps < 1)
    throw std::invalid_argument("attack: bad I-FGSM parameters");
  if (pgd_alpha <= 0.0f || pgd_stepsize <= 0.0f || pgd_max_steps < 1 || pgd_search_rounds < 1)
    throw std::invalid_argument("attack: bad PGD parameters");
  if (cw_lr <= 0.0f || cw_max_iterations < 1 || cw_lambda_lo <= 0.0f ||
      cw_lambda_hi < cw_lambda_lo || cw_search_steps < 1)
    throw std::invalid_argument("attack: bad C&W parameters");
  if (mu < 0.0f) throw std::invalid_argument("attack: mu must be >= 0");
  if (pixel_lo >= pixel_hi) throw std::invalid_argument("attack: bad pixel bounds");
}

AttackResult ifgsm(const LogitModel& model, const GrayImage& patch, int source_label,
                   const AttackConfig& cfg) {
  return iterative_grid_attack(model, patch, source_label, cfg, /*momentum=*/false);
}

AttackResult mifgsm(const LogitModel& model, const GrayImage& patch, int source_label,
                    const AttackConfig& cfg) {
  return iterative_grid_attack(model, patch, source_label, cfg, /*momentum=*/true);
}

AttackResult pgd(const LogitModel& model, const GrayImage& patch, int source_label,
                 const AttackConfig& cfg) {
  cfg.validate();
  const Tensor x0 = patch.to_tensor();
  Tensor g(x0.shape);
  const float m0 = model.margin_with_grad(x0, source_label, g);
  if (m0 > cfg.c) return zero_iteration_success(x0, m0);

  AttackResult best;
  float alpha = cfg.pgd_alpha;
  float step = cfg.pgd_stepsize;
  Tensor x(x0.shape);
  for (int round = 0; round < cfg.pgd_search_rounds; ++round) {
    x = x0;
    Tensor cur_g = g;
    bool ok = false;
    for (int t = 1; t <= cfg.pgd_max_steps; ++t) {
      for (std::int64_t i = 0; i < x.size(); ++i) {
        float v = x[i] + step * sign_of(cur_g[i]);
        v = std::clamp(v, x0[i] - alpha, x0[i] + alpha);
        x[i] = std::clamp(v, cfg.pixel_lo, cfg.pixel_hi);
      }
      const float m = model.margin_with_grad(x, source_label, cur_g);
      if (m > cfg.c) {
        AttackResult r;
        r.success = true;
        r.adversarial = GrayImage::from_tensor(x);
        r.achieved_margin = m;
        r.iterations_used = t;
        r.epsilon_used = alpha;
        fill_distortion(r, x0, x);
        if (!best.success || r.l2_distance < best.l2_distance) best = r;
        ok = true;
        break;
      }
    }
    if (ok) {
      alpha *= 0.5f;
      step *= 0.5f;
    } else {
      alpha *= 2.0f;
      step *= 2.0f;
    }
  }
  if (!best.success) best.iterations_used = cfg.pgd_max_steps;
  return best;
}

AttackResult cw_l2(const LogitModel& model, const GrayImage& patch, int source_label,
                   const AttackConfig& cfg) {
  cfg.validate();
  const Tensor x0 = patch.to_tensor();
  Tensor g(x0.shape);
  const float m0 = model.margin_with_grad(x0, source_label, g);
  if (m0 > cfg.c) return zero_iteration_success(x0, m0);

  // tanh reparameterization: x(w) = (tanh(w)+1)/2, clamped inversion
  Tensor w0(x0.shape);
  for (std::int64_t i = 0; i < x0.size(); ++i) {
    const double xi = std::clamp(static_cast<double>(x0[i]), 1e-6, 1.0 - 1e-6);
    w0[i] = static_cast<float>(std::atanh(2.0 * xi - 1.0));
  }
  const float hinge_at = cfg.c + cfg.cw_slack;

  struct InnerResult {
    bool success = false;
    Tensor x;
    float margin = 0.0f;
    double dist2 = 0.0;  // squared L2
    int iterations = 0;
  };

  auto run_inner = [&](float lambda) {
    InnerResult res;
    Tensor w = w0;
    std::vector<Tensor> params{w};
    AdamState adam = AdamState::for_params(params, cfg.cw_lr, 0.9f, 0.999f);
    Tensor x(x0.shape), gx(x0.shape), gw(x0.shape);
    for (int it = 1; it <= cfg.cw_max_iterations; ++it) {
      double dist2 = 0.0;
      for (std::int64_t i = 0; i < x.size(); ++i) {
        x[i] = (std::tanh(params[0][i]) + 1.0f) * 0.5f;
        const double d = static_cast<double>(x[i]) - x0[i];
        dist2 += d * d;
      }
      const float m = model.margin_with_grad(x, source_label, gx);
      if (m > cfg.c && (!res.success || dist2 < res.dist2)) {
        res.success = true;
        res.x = x;
        res.margin = m;
        res.dist2 = dist2;
        res.iterations = it;
      }
      const bool hinge_active = m < hinge_at;
      for (std::int64_t i = 0; i < x.size(); ++i) {
        const float t = std::tanh(params[0][i]);
        const float dxdw = (1.0f - t * t) * 0.5f;
        float dldx = 2.0f * (x[i] - x0[i]);
        if (hinge_active) dldx -= lambda * gx[i];
        gw[i] = dldx * dxdw;
      }
      std::vector<Tensor> grads{gw};
      adam.update(params, grads);
    }
    return res;
  };

  AttackResult best;
  float lambda_fail = 0.0f;  // largest lambda seen failing
  float lambda_succ = 0.0f;
  int budget = cfg.cw_search_steps;

  auto consider = [&](float lambda, const InnerResult& ir) {
    if (ir.success) {
      if (lambda_succ == 0.0f || lambda < lambda_succ) lambda_succ = lambda;
      const double l2 = std::sqrt(ir.dist2);
      if (!best.success || l2 < best.l2_distance) {
        best.success = true;
        best.adversarial = GrayImage::from_tensor(ir.x);
        best.achieved_margin = ir.margin;
        best.iterations_used = ir.iterations;
        best.epsilon_used = lambda;
        fill_distortion(best, x0, ir.x);
      }
    } else {
      lambda_fail = std::max(lambda_fail, lambda);
    }
  };

  // geometric sweep up from lambda_lo, then log-space bisection between
  // the last failure and the smallest success
  float lambda = cfg.cw_lambda_lo;
  while (budget > 0 && lambda <= cfg.cw_lambda_hi * 1.0001f) {
    consider(lambda, run_inner(lambda));
    --budget;
    if (lambda_succ != 0.0f) break;
    lambda *= 10.0f;
  }
  while (budget > 0 && lambda_succ != 0.0f && lambda_fail > 0.0f) {
    const float mid = std::sqrt(lambda_fail * lambda_succ);
    if (!(mid > lambda_fail && mid < lambda_succ)) break;
    consider(mid, run_inner(mid));
    --budget;
  }

  if (!best.success) best.iterations_used = cfg.cw_max_iterations;
  return best;
}

AttackResult run_attack(const LogitModel& model, const GrayImage& patch, int source_label,
                        const AttackConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::IFGSM: return ifgsm(model, patch, source_label, cfg);
    case Algorithm::PGD: return pgd(model, patch, source_label, cfg);
    case Algorithm::MIFGSM: return mifgsm(model, patch, source_label, cfg);
    case Algorithm::CW_L2: return cw_l2(model, patch, source_label, cfg);
  }
  throw std::invalid_argument("run_attack: bad algorithm");
}

std::vector<AttackResult> attack_batch(const LogitModel& model,
                                       const std::vector<GrayImage>& patches,
                                       const std::vector<int>& labels, const AttackConfig& cfg,
                                       int parallelism) {
  if (patches.size() != labels.size())
    throw std::invalid_argument("attack_batch: patches/labels length mismatch");
  std::vector<AttackResult> results(patches.size());
  parallel_for(static_cast<std::int64_t>(patches.size()), parallelism, [&](std::int64_t i) {
    try {
      results[static_cast<size_t>(i)] =
          run_attack(model, patches[static_cast<size_t>(i)], labels[static_cast<size_t>(i)], cfg);
    } catch (const std::exception&) {
      results[static_cast<size_t>(i)] = AttackResult{};  // recorded as failure
    }
  });
  return results;
}

}  // namespace cfb
