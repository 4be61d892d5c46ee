#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfbench/attack.hpp"
#include "cfbench/dataset.hpp"
#include "cfbench/detector.hpp"

namespace cfb {

/// One benchmark cell: source network, target network, attack template,
/// confidence grid.
struct ExperimentConfig {
  std::string task;  // "median5" or "resize08"
  std::string source_model;
  std::string target_model;
  std::string dataset_dir;
  std::string output_dir;
  AttackConfig attack;
  std::vector<float> confidence_grid;  // strictly ascending, may start at 0
  int sample_count = 500;
  std::uint64_t seed = 1;

  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;
};

/// Matches the report column layout: per confidence value, success rates
/// against source and target plus distortion of the successes.
struct ReportRow {
  float c = 0.0f;
  double asr_sn = 0.0;          // percent over attempted
  double asr_tn = 0.0;          // percent over SN-successes; see tn_defined
  double mean_psnr = 0.0;       // dB over finite-PSNR successes
  int n_success_sn = 0;
  double mean_iterations = 0.0; // over attempted
  // auxiliary (not part of the CSV contract)
  bool tn_defined = false;
  double asr_tn_all = 0.0;      // percent over attempted
  int n_inf_psnr = 0;
};

struct ExperimentOutput {
  std::vector<ReportRow> rows;
  int attempted = 0;
  int soundness_violations = 0;  // successes failing the independent margin re-check
  std::vector<std::vector<int>> iterations_per_c;  // -1 marks failures
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int parallelism);

/// Distribution (%) over iteration counts: bins 0..max_steps plus a
/// trailing failure bin; percentages over attempted samples.
std::vector<double> iteration_histogram(const std::vector<AttackResult>& results, int max_steps);

std::string rows_to_csv(const std::vector<ReportRow>& rows);
void emit_csv(const std::vector<ReportRow>& rows, const std::string& path);
std::vector<ReportRow> parse_csv(const std::string& path);
std::string rows_to_markdown(const std::vector<ReportRow>& rows);
void emit_markdown(const std::vector<ReportRow>& rows, const std::string& path);

/// Sorted source-network margins of the given patches; percentile helper
/// for choosing confidence grids.
std::vector<float> sorted_margins(const DetectorModel& model,
                                  const std::vector<PatchRecord>& patches, int source_label);

}  // namespace cfb
