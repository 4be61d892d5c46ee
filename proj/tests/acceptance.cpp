// Acceptance gate: one pass/fail line per criterion, non-zero exit on any
// failure. Criteria combine exact oracles (gradients, median filter, PSNR,
// linear-model attacks) with trend reproduction on synthetic detector tasks.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cfbench/attack.hpp"
#include "cfbench/bench.hpp"
#include "cfbench/corpus.hpp"
#include "cfbench/dataset.hpp"
#include "cfbench/detector.hpp"
#include "cfbench/image.hpp"
#include "cfbench/pgm.hpp"
#include "cfbench/rng.hpp"
#include "cfbench/train.hpp"
#include "fd_nets.hpp"

using namespace cfb;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Confidence values used for the trend criteria; chosen from the observed
// margin distributions of the trained source detectors (see `margins` CLI).
constexpr float kMedianCMax = 6.0f;
constexpr float kResizeCMax = 2.0f;
constexpr int kParallelism = 4;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
  int failed = 0;
  void line(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %s — %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
};

// Criterion 4 evidence: every success produced anywhere in this binary is
// re-verified against the strict margin condition in a fresh forward pass.
struct Soundness {
  long successes = 0;
  long violations = 0;
  void recheck(const LogitModel& m, const std::vector<AttackResult>& rs, float c) {
    for (const auto& r : rs) {
      if (!r.success) continue;
      ++successes;
      if (!(margin(m.logits(r.adversarial.to_tensor()), 1) > c)) ++violations;
    }
  }
} soundness;

GrayImage median_oracle(const GrayImage& img, int k) {
  const int r = k / 2;
  GrayImage out(img.height, img.width);
  std::vector<float> win;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      win.clear();
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          win.push_back(img.at(std::clamp(y + dy, 0, img.height - 1),
                               std::clamp(x + dx, 0, img.width - 1)));
      std::sort(win.begin(), win.end());
      out.at(y, x) = win[win.size() / 2];
    }
  return out;
}

/// Two-logit linear model: margin(x) = v.x for source label 1.
class LinearModel : public LogitModel {
 public:
  std::vector<float> v;
  explicit LinearModel(std::vector<float> v_) : v(std::move(v_)) {}
  std::array<float, 2> logits(const Tensor& x) const override {
    double m = 0.0;
    for (size_t i = 0; i < v.size(); ++i) m += static_cast<double>(v[i]) * x.data[i];
    return {static_cast<float>(m / 2), static_cast<float>(-m / 2)};
  }
  float margin_with_grad(const Tensor& x, int source_label, Tensor& grad) const override {
    double m = 0.0;
    for (size_t i = 0; i < v.size(); ++i) m += static_cast<double>(v[i]) * x.data[i];
    grad = Tensor(x.shape);
    const float s = source_label == 1 ? 1.0f : -1.0f;
    for (size_t i = 0; i < v.size(); ++i) grad.data[i] = s * v[i];
    return s * static_cast<float>(m);
  }
  double vnorm() const {
    double n = 0.0;
    for (float c : v) n += static_cast<double>(c) * c;
    return std::sqrt(n);
  }
};

DatasetManifest make_manifest(const std::string& style, const std::string& type,
                              std::uint64_t seed) {
  DatasetManifest m;
  m.patch_size = 32;
  m.manipulation.type = type;
  if (type == "median")
    m.manipulation.k = 5;
  else
    m.manipulation.factor = 0.8;
  m.seed = seed;
  m.style = style;
  m.n_images = 53;
  m.image_extent = 256;
  m.per_image_cap = 40;
  m.split_images = {{"train", 30}, {"val", 6}, {"test", 17}};
  return m;
}

struct TrainedModel {
  DetectorModel model;
  double test_accuracy = 0.0;
  double train_seconds = 0.0;
};

TrainedModel train_on(Family fam, const Dataset& ds, int epochs, std::uint64_t seed,
                      float lr = 1e-4f) {
  TrainedModel out{DetectorModel::build(ArchitectureSpec::for_family(fam), seed), 0.0, 0.0};
  TrainConfig tc;
  tc.epochs = epochs;
  tc.seed = seed;  // same init/shuffle seeding the CLI uses
  tc.learning_rate = lr;
  const auto t0 = Clock::now();
  train(out.model, ds, tc);
  out.train_seconds = secs_since(t0);
  out.test_accuracy = evaluate(out.model, ds.splits.at("test")).accuracy;
  return out;
}

/// Manipulated test patches the model classifies correctly, up to `count`.
std::vector<GrayImage> eligible_patches(const DetectorModel& m, const Dataset& ds, int count,
                                        std::uint64_t seed) {
  const auto& test = ds.splits.at("test");
  std::vector<const PatchRecord*> pool;
  for (const auto& r : test)
    if (r.label == 1) pool.push_back(&r);
  std::vector<size_t> order(pool.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 g(derive_seed(seed, 0xBE));
  shuffle_indices(order, g);
  std::vector<GrayImage> out;
  for (size_t idx : order) {
    if (static_cast<int>(out.size()) >= count) break;
    const auto z = m.logits(pool[idx]->patch.to_tensor());
    if (z[1] > z[0]) out.push_back(pool[idx]->patch);
  }
  return out;
}

struct TransferStats {
  double asr_sn = 0.0, asr_tn = 0.0, mean_psnr = 0.0;
  double median_iters = 0.0;
  int n_success = 0;
};

TransferStats attack_and_transfer(const DetectorModel& sn, const DetectorModel* tn,
                                  const std::vector<GrayImage>& patches, AttackConfig cfg) {
  const std::vector<int> labels(patches.size(), 1);
  const auto rs = attack_batch(sn, patches, labels, cfg, kParallelism);
  soundness.recheck(sn, rs, cfg.c);
  TransferStats st;
  int n_tn = 0, n_finite = 0;
  double psnr_acc = 0.0;
  std::vector<int> iters;
  for (const auto& r : rs) {
    iters.push_back(r.iterations_used);
    if (!r.success) continue;
    ++st.n_success;
    if (tn) {
      const auto z = tn->logits(r.adversarial.to_tensor());
      if (z[0] >= z[1]) ++n_tn;
    }
    if (!std::isinf(r.psnr_to_original)) {
      psnr_acc += r.psnr_to_original;
      ++n_finite;
    }
  }
  st.asr_sn = patches.empty() ? 0.0 : 100.0 * st.n_success / static_cast<double>(patches.size());
  st.asr_tn = st.n_success > 0 ? 100.0 * n_tn / st.n_success : 0.0;
  st.mean_psnr = n_finite > 0 ? psnr_acc / n_finite : std::numeric_limits<double>::infinity();
  std::sort(iters.begin(), iters.end());
  st.median_iters = iters.empty() ? 0.0 : iters[iters.size() / 2];
  return st;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

bool dirs_byte_equal(const fs::path& a, const fs::path& b) {
  std::set<fs::path> ra, rb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) ra.insert(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rb.insert(fs::relative(e.path(), b));
  if (ra != rb) return false;
  for (const auto& rel : ra)
    if (slurp(a / rel) != slurp(b / rel)) return false;
  return true;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

}  // namespace

int main() {
  Gate gate;
  const fs::path work = fs::temp_directory_path() / "cfb_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  // ---- criterion 1: gradients vs central finite differences ----
  {
    const auto t0 = Clock::now();
    const float h = 1e-3f;
    int checked = 0;
    long bad = 0;
    std::uint64_t seed = 1000;
    while (checked < 100 && seed < 3000) {
      ++seed;
      float loss = 0.0f;
      Tensor x0, g;
      if (!cfb::testing::loss_at(seed, nullptr, &loss, &x0, &g)) continue;
      for (std::int64_t i = 0; i < x0.size(); ++i) {
        Tensor xp = x0, xm = x0;
        xp[i] += h;
        xm[i] -= h;
        float lp = 0.0f, lm = 0.0f;
        cfb::testing::loss_at(seed, &xp, &lp, nullptr, nullptr);
        cfb::testing::loss_at(seed, &xm, &lm, nullptr, nullptr);
        const double fd = (static_cast<double>(lp) - lm) / (2.0 * h);
        const double tol =
            std::max(1e-3 * std::max(std::fabs(fd), std::fabs(static_cast<double>(g[i]))), 1e-5);
        if (std::fabs(g[i] - fd) > tol) ++bad;
      }
      ++checked;
    }
    const double dt = secs_since(t0);
    gate.line(1, "gradient correctness vs finite differences", checked >= 100 && bad == 0 && dt < 60,
              fmt("%d nets, %ld mismatches, %.1fs", checked, bad, dt));
  }

  // ---- criterion 2: median + PSNR oracles ----
  {
    std::mt19937_64 g(2024);
    int mismatches = 0;
    for (int t = 0; t < 1000; ++t) {
      const int h = 5 + static_cast<int>(uniform_index(g, 8));
      const int w = 5 + static_cast<int>(uniform_index(g, 8));
      const int k = 1 + 2 * static_cast<int>(uniform_index(g, 3));
      GrayImage img(h, w);
      for (auto& p : img.pixels) p = static_cast<float>(uniform01(g));
      if (median_filter(img, k).pixels != median_oracle(img, k).pixels) ++mismatches;
    }
    GrayImage a(8, 8, std::vector<float>(64, 100.0f / 255.0f));
    GrayImage b(8, 8, std::vector<float>(64, 101.0f / 255.0f));
    GrayImage c(8, 8, std::vector<float>(64, 0.25f));
    GrayImage d(8, 8, std::vector<float>(64, 0.75f));
    const double e1 = std::fabs(psnr(a, b) - 48.1308);
    const double e2 = std::fabs(psnr(c, d) - 6.0206);
    gate.line(2, "median filter and PSNR oracles", mismatches == 0 && e1 < 0.01 && e2 < 0.01,
              fmt("1000 images, 0x48.13 err %.4f dB, 6.02 err %.4f dB", e1, e2));
  }

  // ---- criterion 3: C&W optimality on random linear models ----
  {
    const auto t0 = Clock::now();
    std::mt19937_64 g(3033);
    int tested = 0, over = 0, margin_bad = 0, failed = 0;
    while (tested < 100) {
      const int n = 4;
      std::vector<float> v(n);
      for (auto& c : v) c = static_cast<float>(uniform(g, -2.0, 2.0));
      GrayImage patch(1, n);
      for (auto& p : patch.pixels) p = static_cast<float>(uniform(g, 0.3, 0.7));
      LinearModel model(v);
      Tensor grad;
      const float m0 = model.margin_with_grad(patch.to_tensor(), 1, grad);
      if (m0 > -0.05f) continue;
      bool inside = true;
      for (int i = 0; i < n; ++i) {
        const double xi =
            patch.pixels[i] + (-m0) * v[static_cast<size_t>(i)] / (model.vnorm() * model.vnorm());
        if (xi < 0.1 || xi > 0.9) inside = false;  // avoid tanh saturation
      }
      if (!inside) continue;
      AttackConfig cfg;
      cfg.algorithm = Algorithm::CW_L2;
      const AttackResult r = cw_l2(model, patch, 1, cfg);
      if (!r.success) {
        ++failed;
      } else {
        if (r.l2_distance > (-m0 / model.vnorm()) * 1.05 + 1e-6) ++over;
        if (!(margin(model.logits(r.adversarial.to_tensor()), 1) > cfg.c)) ++margin_bad;
      }
      ++tested;
    }
    const double dt = secs_since(t0);
    gate.line(3, "C&W within 5% of hyperplane projection",
              failed == 0 && over == 0 && margin_bad == 0 && dt < 120,
              fmt("100 instances, %d fails, %d >5%%, %d margin violations, %.1fs", failed, over,
                  margin_bad, dt));
  }

  // ---- shared fixture: datasets + models for criteria 5-12 ----
  std::printf("... building datasets and training detectors (this is the slow part)\n");
  std::fflush(stdout);
  const DatasetManifest man_amed = make_manifest("A", "median", 101);
  const DatasetManifest man_ares = make_manifest("A", "resize", 102);
  const DatasetManifest man_bmed = make_manifest("B", "median", 103);
  const Dataset ds_amed = build_dataset(synth_corpus(101, 53, 256, "A"), man_amed);
  const Dataset ds_ares = build_dataset(synth_corpus(102, 53, 256, "A"), man_ares);
  const Dataset ds_bmed = build_dataset(synth_corpus(103, 53, 256, "B"), man_bmed);

  const TrainedModel bs_med = train_on(Family::BS_like, ds_amed, 20, 11);
  const TrainedModel bc_med = train_on(Family::BCplus_like, ds_amed, 10, 11);
  const TrainedModel vgg_med = train_on(Family::VGG_like, ds_amed, 20, 11);
  const TrainedModel bs_bmed = train_on(Family::BS_like, ds_bmed, 20, 12);
  const TrainedModel bs_res = train_on(Family::BS_like, ds_ares, 20, 13);
  // the strided family needs a hotter Adam on the resampling task
  const TrainedModel bc_res = train_on(Family::BCplus_like, ds_ares, 10, 13, 1e-3f);
  const TrainedModel vgg_res = train_on(Family::VGG_like, ds_ares, 20, 13);

  // ---- criterion 5: detector calibration ----
  {
    bool pass = true;
    std::string detail;
    const std::vector<std::pair<const TrainedModel*, const char*>> med = {
        {&bs_med, "bs/med"}, {&bc_med, "bc/med"}, {&vgg_med, "vgg/med"}};
    const std::vector<std::pair<const TrainedModel*, const char*>> res = {
        {&bs_res, "bs/res"}, {&bc_res, "bc/res"}, {&vgg_res, "vgg/res"}};
    for (const auto& [tm, name] : med) {
      if (tm->test_accuracy < 0.95 || tm->train_seconds >= 900) pass = false;
      detail += fmt("%s %.1f%%/%.0fs ", name, 100 * tm->test_accuracy, tm->train_seconds);
    }
    for (const auto& [tm, name] : res) {
      if (tm->test_accuracy < 0.90 || tm->train_seconds >= 900) pass = false;
      detail += fmt("%s %.1f%%/%.0fs ", name, 100 * tm->test_accuracy, tm->train_seconds);
    }
    gate.line(5, "detector accuracy bars (>=95% median, >=90% resize)", pass, detail);
  }

  // ---- criterion 6: ASR_SN >= 99% at c = 0, all attacks x source models ----
  // (also contributes c=0 rows reused nowhere else; CW gets a smaller patch
  // count because of its per-patch cost)
  {
    bool pass = true;
    std::string detail;
    const std::vector<std::pair<const DetectorModel*, const char*>> sources = {
        {&bs_med.model, "bs"}, {&bc_med.model, "bc"}, {&vgg_med.model, "vgg"}};
    for (const auto& [sn, name] : sources) {
      const auto grid_patches = eligible_patches(*sn, ds_amed, 100, 61);
      const auto cw_patches = eligible_patches(*sn, ds_amed, 50, 62);
      for (Algorithm alg :
           {Algorithm::IFGSM, Algorithm::PGD, Algorithm::MIFGSM, Algorithm::CW_L2}) {
        AttackConfig cfg;
        cfg.algorithm = alg;
        cfg.c = 0.0f;
        const auto& patches = alg == Algorithm::CW_L2 ? cw_patches : grid_patches;
        const TransferStats st = attack_and_transfer(*sn, nullptr, patches, cfg);
        if (st.asr_sn < 99.0) {
          pass = false;
          detail += fmt("%s/%s %.1f%% ", name, algorithm_to_string(alg).c_str(), st.asr_sn);
        }
      }
    }
    if (detail.empty()) detail = "all 12 model/attack cells at >=99%";
    gate.line(6, "baseline attack power at c=0", pass, detail);
  }

  // ---- criterion 7: transferability trend on the median task ----
  // one source (constrained first layer), two mismatch axes: a different
  // architecture trained on the same data, and the same architecture
  // trained on the other texture style. Both targets score the same
  // adversarials, so each c needs a single attack run.
  TransferStats net0, netC, tr0, trC;
  {
    const auto patches = eligible_patches(bs_med.model, ds_amed, 500, 71);
    AttackConfig cfg;
    cfg.algorithm = Algorithm::IFGSM;
    cfg.c = 0.0f;
    net0 = attack_and_transfer(bs_med.model, &vgg_med.model, patches, cfg);
    tr0 = attack_and_transfer(bs_med.model, &bs_bmed.model, patches, cfg);
    cfg.c = kMedianCMax;
    netC = attack_and_transfer(bs_med.model, &vgg_med.model, patches, cfg);
    trC = attack_and_transfer(bs_med.model, &bs_bmed.model, patches, cfg);
    const bool net_ok = netC.asr_tn - net0.asr_tn >= 30.0 && netC.mean_psnr >= 30.0;
    const bool tr_ok = trC.asr_tn - tr0.asr_tn >= 30.0 && trC.mean_psnr >= 30.0;
    gate.line(7, "transfer gain >=30 points with PSNR >=30 dB",
              net_ok && tr_ok && patches.size() >= 500,
              fmt("cross-net ASR_TN %.1f->%.1f%%, cross-train %.1f->%.1f%%, PSNR@c=%g %.1f dB, "
                  "n=%zu",
                  net0.asr_tn, netC.asr_tn, tr0.asr_tn, trC.asr_tn, kMedianCMax, netC.mean_psnr,
                  patches.size()));
  }

  // ---- criterion 8: PSNR non-increasing in c (tolerance 1 dB) ----
  {
    bool pass = true;
    std::string detail;
    const std::vector<float> grid = {0.0f, 1.0f, kMedianCMax};
    for (Algorithm alg : {Algorithm::IFGSM, Algorithm::PGD, Algorithm::MIFGSM, Algorithm::CW_L2}) {
      const int n = alg == Algorithm::CW_L2 ? 30 : 60;
      const auto patches = eligible_patches(bs_med.model, ds_amed, n, 81);
      double prev = std::numeric_limits<double>::infinity();
      for (float c : grid) {
        AttackConfig cfg;
        cfg.algorithm = alg;
        cfg.c = c;
        const TransferStats st = attack_and_transfer(bs_med.model, nullptr, patches, cfg);
        if (st.n_success > 0) {
          if (st.mean_psnr > prev + 1.0) {
            pass = false;
            detail += fmt("%s@c=%g rises ", algorithm_to_string(alg).c_str(), c);
          }
          prev = st.mean_psnr;
        }
      }
    }
    // the criterion-7 transfer runs obey the same trend
    if (netC.mean_psnr > net0.mean_psnr + 1.0) {
      pass = false;
      detail += "transfer-pair rises ";
    }
    if (detail.empty()) detail = "monotone for all four attacks and both transfer pairs";
    gate.line(8, "distortion grows with confidence (PSNR trend)", pass, detail);
  }

  // ---- criterion 9: iteration shift on the resize task ----
  {
    const auto patches = eligible_patches(bs_res.model, ds_ares, 150, 91);
    AttackConfig cfg;
    cfg.algorithm = Algorithm::IFGSM;
    cfg.c = 0.0f;
    const TransferStats lo = attack_and_transfer(bs_res.model, nullptr, patches, cfg);
    cfg.c = kResizeCMax;
    const TransferStats hi = attack_and_transfer(bs_res.model, nullptr, patches, cfg);
    gate.line(9, "median I-FGSM iterations increase with c", hi.median_iters > lo.median_iters,
              fmt("median %g @c=0 vs %g @c=%g over %zu patches", lo.median_iters, hi.median_iters,
                  kResizeCMax, patches.size()));
  }

  // ---- criterion 10: MI-FGSM(mu=0) == I-FGSM bit for bit ----
  {
    const auto patches = eligible_patches(bs_med.model, ds_amed, 50, 100);
    AttackConfig cfg;
    cfg.c = 0.5f;
    cfg.mu = 0.0f;
    int diffs = 0;
    for (const auto& p : patches) {
      const AttackResult a = ifgsm(bs_med.model, p, 1, cfg);
      const AttackResult b = mifgsm(bs_med.model, p, 1, cfg);
      const bool same = a.success == b.success && a.iterations_used == b.iterations_used &&
                        a.epsilon_used == b.epsilon_used &&
                        (!a.success || a.adversarial.pixels == b.adversarial.pixels);
      if (!same) ++diffs;
    }
    gate.line(10, "MI-FGSM with mu=0 reduces to I-FGSM", diffs == 0,
              fmt("%zu patches, %d trajectory differences", patches.size(), diffs));
  }

  // ---- criterion 11: determinism and round-trips ----
  {
    bool ds_ok = false, model_ok = false, csv_ok = false, rt_ok = false, pgm_ok = false;
    DatasetManifest sm;
    sm.patch_size = 32;
    sm.manipulation.type = "median";
    sm.manipulation.k = 5;
    sm.seed = 55;
    sm.style = "A";
    sm.n_images = 14;
    sm.image_extent = 128;
    sm.per_image_cap = 8;
    sm.split_images = {{"train", 8}, {"val", 3}, {"test", 3}};
    const Dataset d1 = build_dataset(synth_corpus(55, 14, 128, "A"), sm);
    const Dataset d2 = build_dataset(synth_corpus(55, 14, 128, "A"), sm);
    save_dataset(d1, (work / "d1").string());
    save_dataset(d2, (work / "d2").string());
    ds_ok = dirs_byte_equal(work / "d1", work / "d2");

    TrainConfig tc;
    tc.epochs = 2;
    DetectorModel m1 = DetectorModel::build(ArchitectureSpec::for_family(Family::BCplus_like), 7);
    DetectorModel m2 = DetectorModel::build(ArchitectureSpec::for_family(Family::BCplus_like), 7);
    train(m1, d1, tc);
    train(m2, d2, tc);
    save_model(m1, (work / "m1.model").string());
    save_model(m2, (work / "m2.model").string());
    model_ok = slurp(work / "m1.model") == slurp(work / "m2.model");

    const DetectorModel m1b = load_model((work / "m1.model").string());
    save_model(m1b, (work / "m1rt.model").string());
    rt_ok = slurp(work / "m1.model") == slurp(work / "m1rt.model");

    // CSV determinism needs a source that actually classifies the patches;
    // the two-epoch byte-compare models above are not that source
    save_model(bc_med.model, (work / "sn.model").string());
    save_model(vgg_med.model, (work / "tn.model").string());
    ExperimentConfig ec;
    ec.task = "median5";
    ec.source_model = (work / "sn.model").string();
    ec.target_model = (work / "tn.model").string();
    ec.dataset_dir = (work / "d1").string();
    ec.output_dir = (work / "out").string();
    ec.attack.algorithm = Algorithm::IFGSM;
    ec.confidence_grid = {0.0f, 1.0f};
    ec.sample_count = 20;
    ec.seed = 5;
    const ExperimentOutput o1 = run_experiment(ec, 1);
    const ExperimentOutput o2 = run_experiment(ec, kParallelism);
    csv_ok = rows_to_csv(o1.rows) == rows_to_csv(o2.rows);
    soundness.successes += o1.rows.back().n_success_sn + o1.rows.front().n_success_sn;
    soundness.violations += o1.soundness_violations;

    GrayImage img(9, 7);
    std::mt19937_64 g(77);
    for (auto& p : img.pixels) p = static_cast<float>(uniform01(g));
    img = quantize8(img);
    save_pgm(img, (work / "rt.pgm").string());
    pgm_ok = load_pgm((work / "rt.pgm").string()).pixels == img.pixels;

    gate.line(11, "determinism and byte-exact round-trips",
              ds_ok && model_ok && csv_ok && rt_ok && pgm_ok,
              fmt("dataset %d, model %d, csv(parallelism) %d, model-rt %d, pgm-rt %d", ds_ok,
                  model_ok, csv_ok, rt_ok, pgm_ok));
  }

  // ---- criterion 12: end-to-end CLI smoke ----
  {
#ifdef CFBENCH_CLI_PATH
    const auto t0 = Clock::now();
    const std::string cli = CFBENCH_CLI_PATH;
    const fs::path e2e = work / "e2e";
    fs::create_directories(e2e);
    {
      std::ofstream f(e2e / "manifest.json");
      f << R"({"patch_size":32,"manipulation":{"type":"median","k":5},"seed":1201,"style":"A",)"
        << R"("n_images":30,"image_extent":192,"per_image_cap":16,)"
        << R"("splits":{"train":16,"val":4,"test":10}})";
    }
    auto sh = [&](const std::string& cmd) {
      return std::system((cmd + " >> " + (e2e / "log.txt").string() + " 2>&1").c_str()) == 0;
    };
    bool ok = sh(cli + " gen-data " + (e2e / "manifest.json").string() + " --out " +
                 (e2e / "ds").string());
    ok = ok && sh(cli + " --seed 31 train bcplus_like " + (e2e / "ds").string() + " " +
                  (e2e / "sn.model").string() + " --epochs 8");
    ok = ok && sh(cli + " --seed 32 train vgg_like " + (e2e / "ds").string() + " " +
                  (e2e / "tn.model").string() + " --epochs 8");
    int well_formed = 0;
    for (const std::string alg : {"ifgsm", "pgd", "mifgsm", "cw_l2"}) {
      const fs::path out = e2e / ("out_" + alg);
      {
        std::ofstream f(e2e / (alg + ".json"));
        f << "{\"task\":\"median5\",\"source_model\":\"" << (e2e / "sn.model").string()
          << "\",\"target_model\":\"" << (e2e / "tn.model").string() << "\",\"dataset\":\""
          << (e2e / "ds").string() << "\",\"output_dir\":\"" << out.string()
          << "\",\"attack\":{\"algorithm\":\"" << alg
          << "\"},\"confidence_grid\":[0,0.5,1.5,3],\"sample_count\":100,\"seed\":9}";
      }
      ok = ok && sh(cli + " bench " + (e2e / (alg + ".json")).string());
      try {
        const auto rows = parse_csv((out / "report.csv").string());
        if (rows.size() == 4 &&
            slurp(out / "report.csv").rfind("c,asr_sn,asr_tn,psnr_mean,n_success,mean_iters\n",
                                            0) == 0)
          ++well_formed;
      } catch (const std::exception&) {
      }
      ok = ok && sh(cli + " report " + out.string());
    }
    const double dt = secs_since(t0);
    gate.line(12, "end-to-end CLI pipeline under 30 minutes", ok && well_formed == 4 && dt < 1800,
              fmt("%d/4 well-formed CSVs, %.0fs", well_formed, dt));
#else
    gate.line(12, "end-to-end CLI pipeline under 30 minutes", false, "CLI path not compiled in");
#endif
  }

  // ---- criterion 4 (evidence gathered across all runs above) ----
  gate.line(4, "strict stop-condition soundness on every success",
            soundness.successes > 0 && soundness.violations == 0,
            fmt("%ld successes re-verified, %ld violations", soundness.successes,
                soundness.violations));

  fs::remove_all(work);
  std::printf("%s (%d criteria failed)\n", gate.failed == 0 ? "ACCEPTED" : "REJECTED", gate.failed);
  return gate.failed == 0 ? 0 : 1;
}
