#include "cfbench/train.hpp"

#include <cmath>
#include <stdexcept>

#include "cfbench/adam.hpp"
#include "cfbench/rng.hpp"

namespace cfb {

std::vector<EpochMetrics> train(DetectorModel& model, const Dataset& dataset,
                                const TrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.epochs < 1)
    throw std::invalid_argument("train: batch_size and epochs must be >= 1");
  const auto it = dataset.splits.find("train");
  if (it == dataset.splits.end() || it->second.empty())
    throw std::invalid_argument("train: dataset has no train split");
  const auto& train_set = it->second;
  const auto vit = dataset.splits.find("val");
  const std::vector<PatchRecord>* val_set =
      (vit != dataset.splits.end() && !vit->second.empty()) ? &vit->second : nullptr;
  for (const auto& r : train_set)
    if (r.patch.height != model.spec.patch_extent || r.patch.width != model.spec.patch_extent)
      throw std::invalid_argument("train: patch extent " + std::to_string(r.patch.height) +
                                  " does not match model extent " +
                                  std::to_string(model.spec.patch_extent));

  AdamState adam = AdamState::for_params(model.weights, cfg.learning_rate, cfg.beta1, cfg.beta2);
  std::vector<Tensor> grads;
  grads.reserve(model.weights.size());
  for (const auto& w : model.weights) grads.push_back(Tensor::zeros(w.shape));

  std::vector<EpochMetrics> history;
  std::vector<Tensor> best_weights = model.weights;
  double best_val = -1.0;

  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0xE0000 + static_cast<std::uint64_t>(epoch)));
    shuffle_indices(order, shuffle_rng);

    double epoch_loss = 0.0;
    size_t pos = 0;
    int step = 0;
    while (pos < order.size()) {
      const size_t bend = std::min(order.size(), pos + static_cast<size_t>(cfg.batch_size));
      const int bsz = static_cast<int>(bend - pos);
      for (auto& g : grads)
        for (auto& v : g.data) v = 0.0f;

      double batch_loss = 0.0;
      for (size_t bi = pos; bi < bend; ++bi) {
        const PatchRecord& rec = train_set[order[bi]];
        const Tensor x = rec.patch.to_tensor();
        Tape tape;
        std::vector<Tape::NodeId> wnodes;
        Tape::NodeId in = tape.leaf_ref(&x);
        Tape::NodeId out = model.forward(tape, in, &wnodes);
        Tape::NodeId loss = tape.softmax_cross_entropy(out, rec.label);
        tape.backward(loss);
        batch_loss += tape.value(loss)[0];
        for (size_t wi = 0; wi < wnodes.size(); ++wi) {
          const Tensor g = tape.grad(wnodes[wi]);
          Tensor& acc = grads[wi];
          for (std::int64_t k = 0; k < g.size(); ++k) acc[k] += g[k];
        }
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: loss diverged (NaN/Inf) at epoch " +
                                 std::to_string(epoch) + ", step " + std::to_string(step));
      epoch_loss += batch_loss;
      const float inv = 1.0f / static_cast<float>(bsz);
      for (auto& g : grads)
        for (auto& v : g.data) v *= inv;
      adam.update(model.weights, grads);
      model.project();
      pos = bend;
      ++step;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = epoch_loss / static_cast<double>(train_set.size());
    if (val_set) {
      em.val_accuracy = evaluate(model, *val_set).accuracy;
      if (em.val_accuracy > best_val) {
        best_val = em.val_accuracy;
        best_weights = model.weights;
      }
    }
    history.push_back(em);
  }

  if (val_set) model.weights = std::move(best_weights);
  model.project();
  model.fingerprint.manifest_hash = manifest_hash(dataset.manifest);
  model.fingerprint.seed = cfg.seed;
  model.fingerprint.epochs = cfg.epochs;
  return history;
}

EvalResult evaluate(const DetectorModel& model, const std::vector<PatchRecord>& patches) {
  EvalResult r;
  r.n = static_cast<int>(patches.size());
  if (patches.empty()) return r;
  int correct = 0, n0 = 0, n1 = 0, fp = 0, fn = 0;
  for (const auto& rec : patches) {
    const auto z = model.logits(rec.patch.to_tensor());
    const int pred = z[1] > z[0] ? 1 : 0;
    if (pred == rec.label) ++correct;
    if (rec.label == 0) {
      ++n0;
      if (pred == 1) ++fp;
    } else {
      ++n1;
      if (pred == 0) ++fn;
    }
  }
  r.accuracy = static_cast<double>(correct) / r.n;
  r.false_positive_rate = n0 ? static_cast<double>(fp) / n0 : 0.0;
  r.false_negative_rate = n1 ? static_cast<double>(fn) / n1 : 0.0;
  return r;
}

}  // namespace cfb
