#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfbench/image.hpp"
#include "cfbench/logit_model.hpp"

namespace cfb {

enum class Algorithm { IFGSM, PGD, MIFGSM, CW_L2 };

Algorithm algorithm_from_string(const std::string& s);
std::string algorithm_to_string(Algorithm a);

/// Per-algorithm parameters plus the confidence margin c shared by all
/// stop conditions. For C&W the built-in confidence is identified with c.
struct AttackConfig {
  Algorithm algorithm = Algorithm::IFGSM;
  float c = 0.0f;  // required logit margin, >= 0

  // I-FGSM / MI-FGSM: ascending grid of epsilons, per-iteration step
  // epsilon/max_steps, first (smallest-epsilon) success returned.
  float max_epsilon = 1.0f;
  int epsilon_grid_size = 100;
  int max_steps = 10;
  float mu = 0.2f;  // MI-FGSM momentum multiplier

  // PGD: signed steps projected onto the L_inf ball of radius alpha;
  // outer halving/doubling search over (alpha, stepsize).
  float pgd_alpha = 0.5f;
  float pgd_stepsize = 0.05f;
  int pgd_max_steps = 40;
  int pgd_search_rounds = 5;

  // C&W-L2 in tanh space; lambda weighs the margin hinge against the
  // squared distance. The slack keeps the strict margin > c reachable.
  float cw_lr = 1e-2f;
  int cw_max_iterations = 200;
  float cw_lambda_lo = 1e-2f;
  float cw_lambda_hi = 1e2f;
  int cw_search_steps = 9;
  float cw_slack = 1e-3f;

  float pixel_lo = 0.0f;
  float pixel_hi = 1.0f;

  void validate() const;
};

struct AttackResult {
  bool success = false;
  GrayImage adversarial;  // meaningful only when success
  float achieved_margin = 0.0f;
  int iterations_used = 0;
  float epsilon_used = 0.0f;  // grid/search attacks
  double psnr_to_original = 0.0;
  double l2_distance = 0.0;
  double linf_distance = 0.0;
};

AttackResult ifgsm(const LogitModel& model, const GrayImage& patch, int source_label,
                   const AttackConfig& cfg);
AttackResult mifgsm(const LogitModel& model, const GrayImage& patch, int source_label,
                    const AttackConfig& cfg);
AttackResult pgd(const LogitModel& model, const GrayImage& patch, int source_label,
                 const AttackConfig& cfg);
AttackResult cw_l2(const LogitModel& model, const GrayImage& patch, int source_label,
                   const AttackConfig& cfg);

/// Dispatch on cfg.algorithm.
AttackResult run_attack(const LogitModel& model, const GrayImage& patch, int source_label,
                        const AttackConfig& cfg);

/// Independent per-patch attacks; result order matches input order and is
/// the same for any parallelism. A per-patch failure becomes an
/// unsuccessful result, never an abort.
std::vector<AttackResult> attack_batch(const LogitModel& model,
                                       const std::vector<GrayImage>& patches,
                                       const std::vector<int>& labels, const AttackConfig& cfg,
                                       int parallelism);

}  // namespace cfb
