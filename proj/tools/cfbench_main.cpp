// Command-line driver: dataset generation, detector training, single-patch
// attacks, transferability experiments and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfbench/attack.hpp"
#include "cfbench/bench.hpp"
#include "cfbench/corpus.hpp"
#include "cfbench/dataset.hpp"
#include "cfbench/detector.hpp"
#include "cfbench/parallel.hpp"
#include "cfbench/pgm.hpp"
#include "cfbench/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cfb;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cmd_gen_data(const std::string& manifest_path, const std::string& out_dir,
                 std::int64_t seed_override) {
  DatasetManifest manifest = DatasetManifest::from_json_text(read_file(manifest_path));
  if (seed_override >= 0) manifest.seed = static_cast<std::uint64_t>(seed_override);

  std::vector<SourceImage> corpus;
  if (!manifest.source_dir.empty())
    corpus = load_corpus(manifest.source_dir);
  else
    corpus = synth_corpus(manifest.seed, manifest.n_images, manifest.image_extent, manifest.style);

  Dataset ds = build_dataset(corpus, manifest);
  save_dataset(ds, out_dir);
  int total = 0;
  for (const auto& [name, recs] : ds.splits) {
    std::cout << name << ": " << recs.size() << " patches\n";
    total += static_cast<int>(recs.size());
  }
  std::cout << "wrote " << total << " patches to " << out_dir << "\n";
  if (ds.manifest.degenerate)
    std::cout << "warning: manipulation left every patch unchanged (degenerate dataset)\n";
  return 0;
}

int cmd_train(const std::string& family, const std::string& dataset_dir,
              const std::string& out_path, std::int64_t seed, int epochs, int batch, float lr) {
  const Family fam = family_from_string(family);
  Dataset ds = load_dataset(dataset_dir);

  TrainConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  if (epochs > 0) {
    cfg.epochs = epochs;
  } else {
    switch (fam) {  // per-family defaults
      case Family::BS_like: cfg.epochs = 20; break;
      case Family::VGG_like: cfg.epochs = 20; break;
      case Family::BCplus_like: cfg.epochs = 10; break;
    }
  }

  DetectorModel model =
      DetectorModel::build(ArchitectureSpec::for_family(fam, ds.manifest.patch_size), cfg.seed);
  const auto history = train(model, ds, cfg);
  for (const auto& em : history)
    std::printf("epoch %2d  loss %.4f  val_acc %.4f\n", em.epoch, em.train_loss, em.val_accuracy);

  const auto test = evaluate(model, ds.splits.at("test"));
  std::printf("test accuracy %.4f  fpr %.4f  fnr %.4f\n", test.accuracy, test.false_positive_rate,
              test.false_negative_rate);
  save_model(model, out_path);
  std::cout << "saved " << out_path << "\n";
  return 0;
}

int cmd_attack(const std::string& model_path, const std::string& patch_path,
               const std::string& alg, float c, int label, const std::string& out_path) {
  DetectorModel model = load_model(model_path);
  GrayImage patch = load_pgm(patch_path);
  AttackConfig cfg;
  cfg.algorithm = algorithm_from_string(alg);
  cfg.c = c;
  AttackResult r = run_attack(model, patch, label, cfg);
  if (!r.success) {
    std::cout << "failure: no adversarial sample with margin > " << c << "\n";
    return 0;
  }
  std::printf("success  margin %.4f  iterations %d  psnr %s dB  l2 %.5f  linf %.5f\n",
              r.achieved_margin, r.iterations_used,
              std::isinf(r.psnr_to_original) ? "inf"
                                             : std::to_string(r.psnr_to_original).c_str(),
              r.l2_distance, r.linf_distance);
  if (!out_path.empty()) {
    save_pgm(quantize8(r.adversarial), out_path);
    std::cout << "wrote " << out_path << " (8-bit quantized)\n";
  }
  return 0;
}

int cmd_bench(const std::string& experiment_path, int parallelism, std::int64_t seed_override) {
  ExperimentConfig cfg = ExperimentConfig::from_json_text(read_file(experiment_path));
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  ExperimentOutput out = run_experiment(cfg, parallelism);

  fs::create_directories(cfg.output_dir);
  emit_csv(out.rows, (fs::path(cfg.output_dir) / "report.csv").string());
  emit_markdown(out.rows, (fs::path(cfg.output_dir) / "report.md").string());

  nlohmann::json aux;
  aux["attempted"] = out.attempted;
  aux["soundness_violations"] = out.soundness_violations;
  aux["config"] = nlohmann::json::parse(cfg.to_json_text());
  nlohmann::json rows = nlohmann::json::array();
  for (size_t i = 0; i < out.rows.size(); ++i) {
    const auto& r = out.rows[i];
    rows.push_back({{"c", r.c},
                    {"asr_sn", r.asr_sn},
                    {"asr_tn_over_successes", r.tn_defined ? nlohmann::json(r.asr_tn)
                                                           : nlohmann::json(nullptr)},
                    {"asr_tn_over_attempted", r.asr_tn_all},
                    {"n_success", r.n_success_sn},
                    {"n_inf_psnr", r.n_inf_psnr},
                    {"iterations", out.iterations_per_c[i]}});
  }
  aux["rows"] = rows;
  std::ofstream jf(fs::path(cfg.output_dir) / "results.json", std::ios::binary);
  jf << aux.dump(2) << "\n";

  std::cout << rows_to_csv(out.rows);
  if (out.soundness_violations > 0)
    std::cerr << "warning: " << out.soundness_violations
              << " successes failed the margin re-check\n";
  return 0;
}

int cmd_report(const std::string& results_dir) {
  const auto rows = parse_csv((fs::path(results_dir) / "report.csv").string());
  const std::string md = rows_to_markdown(rows);
  emit_markdown(rows, (fs::path(results_dir) / "report.md").string());
  std::cout << md;
  return 0;
}

int cmd_margins(const std::string& model_path, const std::string& dataset_dir, int label) {
  DetectorModel model = load_model(model_path);
  Dataset ds = load_dataset(dataset_dir);
  std::vector<PatchRecord> pool;
  for (const auto& r : ds.splits.at("test"))
    if (r.label == label) pool.push_back(r);
  if (pool.empty()) throw std::runtime_error("no test patches with label " + std::to_string(label));
  const auto ms = sorted_margins(model, pool, label);
  std::cout << "margins of " << ms.size() << " label-" << label << " test patches:\n";
  for (int p : {0, 10, 25, 50, 75, 90, 100}) {
    const size_t idx = std::min(ms.size() - 1, static_cast<size_t>(p / 100.0 * ms.size()));
    std::printf("  p%-3d  %.4f\n", p, ms[idx]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence-controlled adversarial attacks against CNN manipulation detectors"};
  app.require_subcommand(1);

  std::int64_t seed = -1;
  app.add_option("--seed", seed, "override the config seed")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "generate a labeled patch dataset");
  std::string manifest_path, out_dir = "dataset";
  gen->add_option("manifest", manifest_path, "manifest JSON")->required();
  gen->add_option("--out", out_dir, "output dataset directory")->capture_default_str();

  auto* tr = app.add_subcommand("train", "train a detector");
  std::string family, dataset_dir, model_out;
  int epochs = 0, batch = 32;
  float lr = 1e-4f;
  std::int64_t train_seed = 1;
  tr->add_option("family", family, "bs_like | bcplus_like | vgg_like")->required();
  tr->add_option("dataset", dataset_dir, "dataset directory")->required();
  tr->add_option("out", model_out, "output model file")->required();
  tr->add_option("--epochs", epochs, "epochs (0 = family default)");
  tr->add_option("--batch", batch, "batch size")->capture_default_str();
  tr->add_option("--lr", lr, "learning rate")->capture_default_str();

  auto* at = app.add_subcommand("attack", "attack a single patch (debug)");
  std::string at_model, at_patch, at_alg = "ifgsm", at_out;
  float at_c = 0.0f;
  int at_label = 1;
  at->add_option("model", at_model, "model file")->required();
  at->add_option("patch", at_patch, "input patch (PGM)")->required();
  at->add_option("--alg", at_alg, "ifgsm | pgd | mifgsm | cw_l2")->capture_default_str();
  at->add_option("--c", at_c, "confidence margin")->capture_default_str();
  at->add_option("--label", at_label, "source label of the patch")->capture_default_str();
  at->add_option("--out", at_out, "write adversarial patch here");

  auto* be = app.add_subcommand("bench", "run a transferability experiment");
  std::string experiment_path;
  int parallelism = default_parallelism();
  be->add_option("experiment", experiment_path, "experiment JSON")->required();
  be->add_option("--parallelism", parallelism, "worker threads")->capture_default_str();

  auto* re = app.add_subcommand("report", "render markdown from an experiment's CSV");
  std::string results_dir;
  re->add_option("results", results_dir, "experiment output directory")->required();

  auto* ma = app.add_subcommand("margins", "print source-network margin percentiles");
  std::string ma_model, ma_dataset;
  int ma_label = 1;
  ma->add_option("model", ma_model, "model file")->required();
  ma->add_option("dataset", ma_dataset, "dataset directory")->required();
  ma->add_option("--label", ma_label, "patch class to measure")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(manifest_path, out_dir, seed);
    if (tr->parsed())
      return cmd_train(family, dataset_dir, model_out, seed >= 0 ? seed : train_seed, epochs, batch,
                       lr);
    if (at->parsed()) return cmd_attack(at_model, at_patch, at_alg, at_c, at_label, at_out);
    if (be->parsed()) return cmd_bench(experiment_path, parallelism, seed);
    if (re->parsed()) return cmd_report(results_dir);
    if (ma->parsed()) return cmd_margins(ma_model, ma_dataset, ma_label);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
