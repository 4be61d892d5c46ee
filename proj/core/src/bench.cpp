#include "cfbench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cfbench/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cfb {

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string fmt1(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

double parse_field(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

AttackConfig attack_from_json(const json& j) {
  AttackConfig a;
  a.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  a.c = j.value("c", 0.0f);
  a.max_epsilon = j.value("max_epsilon", a.max_epsilon);
  a.epsilon_grid_size = j.value("epsilon_grid_size", a.epsilon_grid_size);
  a.max_steps = j.value("max_steps", a.max_steps);
  a.mu = j.value("mu", a.mu);
  a.pgd_alpha = j.value("pgd_alpha", a.pgd_alpha);
  a.pgd_stepsize = j.value("pgd_stepsize", a.pgd_stepsize);
  a.pgd_max_steps = j.value("pgd_max_steps", a.pgd_max_steps);
  a.pgd_search_rounds = j.value("pgd_search_rounds", a.pgd_search_rounds);
  a.cw_lr = j.value("cw_lr", a.cw_lr);
  a.cw_max_iterations = j.value("cw_max_iterations", a.cw_max_iterations);
  a.cw_lambda_lo = j.value("cw_lambda_lo", a.cw_lambda_lo);
  a.cw_lambda_hi = j.value("cw_lambda_hi", a.cw_lambda_hi);
  a.cw_search_steps = j.value("cw_search_steps", a.cw_search_steps);
  a.cw_slack = j.value("cw_slack", a.cw_slack);
  return a;
}

json attack_to_json(const AttackConfig& a) {
  return json{{"algorithm", algorithm_to_string(a.algorithm)},
              {"max_epsilon", a.max_epsilon},
              {"epsilon_grid_size", a.epsilon_grid_size},
              {"max_steps", a.max_steps},
              {"mu", a.mu},
              {"pgd_alpha", a.pgd_alpha},
              {"pgd_stepsize", a.pgd_stepsize},
              {"pgd_max_steps", a.pgd_max_steps},
              {"pgd_search_rounds", a.pgd_search_rounds},
              {"cw_lr", a.cw_lr},
              {"cw_max_iterations", a.cw_max_iterations},
              {"cw_lambda_lo", a.cw_lambda_lo},
              {"cw_lambda_hi", a.cw_lambda_hi},
              {"cw_search_steps", a.cw_search_steps},
              {"cw_slack", a.cw_slack}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  c.task = j.at("task").get<std::string>();
  c.source_model = j.at("source_model").get<std::string>();
  c.target_model = j.at("target_model").get<std::string>();
  c.dataset_dir = j.at("dataset").get<std::string>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.attack = attack_from_json(j.at("attack"));
  c.confidence_grid = j.at("confidence_grid").get<std::vector<float>>();
  c.sample_count = j.value("sample_count", 500);
  c.seed = j.value("seed", static_cast<std::uint64_t>(1));
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["task"] = task;
  j["source_model"] = source_model;
  j["target_model"] = target_model;
  j["dataset"] = dataset_dir;
  j["output_dir"] = output_dir;
  j["attack"] = attack_to_json(attack);
  j["confidence_grid"] = confidence_grid;
  j["sample_count"] = sample_count;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
  if (task != "median5" && task != "resize08")
    throw std::invalid_argument("experiment: unknown task '" + task + "'");
  if (confidence_grid.empty()) throw std::invalid_argument("experiment: empty confidence grid");
  for (size_t i = 0; i < confidence_grid.size(); ++i) {
    if (confidence_grid[i] < 0.0f)
      throw std::invalid_argument("experiment: confidence values must be >= 0");
    if (i > 0 && confidence_grid[i] <= confidence_grid[i - 1])
      throw std::invalid_argument("experiment: confidence grid must be strictly ascending");
  }
  if (sample_count < 1) throw std::invalid_argument("experiment: sample_count must be >= 1");
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int parallelism) {
  cfg.validate();
  DetectorModel sn = load_model(cfg.source_model);
  DetectorModel tn = load_model(cfg.target_model);
  Dataset ds = load_dataset(cfg.dataset_dir);

  const std::string dhash = manifest_hash(ds.manifest);
  if (sn.fingerprint.manifest_hash != dhash)
    std::cerr << "warning: source model was trained on a different dataset (fingerprint "
              << sn.fingerprint.manifest_hash << " vs " << dhash << ")\n";
  if (tn.fingerprint.manifest_hash != sn.fingerprint.manifest_hash)
    std::cerr << "warning: source/target training fingerprints differ (that may be the point of "
                 "this experiment)\n";

  // eligible pool: manipulated test patches the source network gets right
  const auto& test = ds.splits.at("test");
  std::vector<const PatchRecord*> manipulated;
  for (const auto& r : test)
    if (r.label == 1) manipulated.push_back(&r);
  if (manipulated.empty()) throw std::runtime_error("experiment: no manipulated test patches");

  std::vector<size_t> order(manipulated.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xBE));
  shuffle_indices(order, rng);

  std::vector<GrayImage> patches;
  for (size_t idx : order) {
    if (static_cast<int>(patches.size()) >= cfg.sample_count) break;
    const PatchRecord& r = *manipulated[idx];
    const auto z = sn.logits(r.patch.to_tensor());
    if (z[1] > z[0]) patches.push_back(r.patch);  // correctly classified as manipulated
  }
  if (patches.empty())
    throw std::runtime_error("experiment: source network misclassifies every manipulated patch");
  const std::vector<int> labels(patches.size(), 1);

  ExperimentOutput out;
  out.attempted = static_cast<int>(patches.size());
  for (float c : cfg.confidence_grid) {
    AttackConfig acfg = cfg.attack;
    acfg.c = c;
    const auto results = attack_batch(sn, patches, labels, acfg, parallelism);

    ReportRow row;
    row.c = c;
    int n_succ = 0, n_tn = 0, n_finite = 0;
    double psnr_acc = 0.0, iter_acc = 0.0;
    std::vector<int> iters;
    iters.reserve(results.size());
    for (size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      iter_acc += r.iterations_used;
      iters.push_back(r.success ? r.iterations_used : -1);
      if (!r.success) continue;
      ++n_succ;
      // independent re-check of the stop condition, outside the attack loop
      const auto z_sn = sn.logits(r.adversarial.to_tensor());
      if (!(margin(z_sn, 1) > c)) ++out.soundness_violations;
      const auto z_tn = tn.logits(r.adversarial.to_tensor());
      if (z_tn[0] >= z_tn[1]) ++n_tn;  // target calls it pristine
      if (std::isinf(r.psnr_to_original)) {
        ++row.n_inf_psnr;
      } else {
        psnr_acc += r.psnr_to_original;
        ++n_finite;
      }
    }
    row.n_success_sn = n_succ;
    row.asr_sn = 100.0 * n_succ / out.attempted;
    row.tn_defined = n_succ > 0;
    row.asr_tn = row.tn_defined ? 100.0 * n_tn / n_succ : std::numeric_limits<double>::quiet_NaN();
    row.asr_tn_all = 100.0 * n_tn / out.attempted;
    if (n_succ == 0)
      row.mean_psnr = std::numeric_limits<double>::quiet_NaN();
    else if (n_finite == 0)
      row.mean_psnr = std::numeric_limits<double>::infinity();
    else
      row.mean_psnr = psnr_acc / n_finite;
    row.mean_iterations = iter_acc / out.attempted;
    out.rows.push_back(row);
    out.iterations_per_c.push_back(std::move(iters));
  }
  return out;
}

std::vector<double> iteration_histogram(const std::vector<AttackResult>& results, int max_steps) {
  if (results.empty()) throw std::invalid_argument("iteration_histogram: empty results");
  std::vector<double> bins(static_cast<size_t>(max_steps) + 2, 0.0);
  for (const auto& r : results) {
    if (!r.success)
      bins.back() += 1.0;
    else
      bins[static_cast<size_t>(std::min(r.iterations_used, max_steps))] += 1.0;
  }
  const double scale = 100.0 / static_cast<double>(results.size());
  for (auto& b : bins) b *= scale;
  return bins;
}

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("emit_csv: no rows");
  std::string out = "c,asr_sn,asr_tn,psnr_mean,n_success,mean_iters\n";
  for (const auto& r : rows) {
    out += fmt_g(r.c);
    out += ',';
    out += fmt1(r.asr_sn);
    out += ',';
    out += fmt1(r.asr_tn);
    out += ',';
    out += fmt1(r.mean_psnr);
    out += ',';
    out += std::to_string(r.n_success_sn);
    out += ',';
    out += fmt1(r.mean_iterations);
    out += '\n';
  }
  return out;
}

void emit_csv(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_csv: cannot write " + path);
  f << rows_to_csv(rows);
  if (!f) throw std::runtime_error("emit_csv: write failed for " + path);
}

std::vector<ReportRow> parse_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("parse_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "c,asr_sn,asr_tn,psnr_mean,n_success,mean_iters")
    throw std::runtime_error("parse_csv: bad header in " + path);
  std::vector<ReportRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::vector<std::string> fields;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (fields.size() != 6) throw std::runtime_error("parse_csv: bad row '" + line + "'");
    ReportRow r;
    r.c = static_cast<float>(parse_field(fields[0]));
    r.asr_sn = parse_field(fields[1]);
    r.asr_tn = parse_field(fields[2]);
    r.mean_psnr = parse_field(fields[3]);
    r.n_success_sn = std::stoi(fields[4]);
    r.mean_iterations = parse_field(fields[5]);
    r.tn_defined = !std::isnan(r.asr_tn);
    rows.push_back(r);
  }
  return rows;
}

std::string rows_to_markdown(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("emit_markdown: no rows");
  std::string out = "| c | ASR_SN | ASR_TN | PSNR |\n|---|--------|--------|------|\n";
  for (const auto& r : rows) {
    out += "| " + fmt_g(r.c) + " | " + fmt1(r.asr_sn) + " | " + fmt1(r.asr_tn) + " | " +
           fmt1(r.mean_psnr) + " |\n";
  }
  return out;
}

void emit_markdown(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_markdown: cannot write " + path);
  f << rows_to_markdown(rows);
}

std::vector<float> sorted_margins(const DetectorModel& model,
                                  const std::vector<PatchRecord>& patches, int source_label) {
  std::vector<float> ms;
  ms.reserve(patches.size());
  for (const auto& r : patches)
    ms.push_back(margin(model.logits(r.patch.to_tensor()), source_label));
  std::sort(ms.begin(), ms.end());
  return ms;
}

}  // namespace cfb
