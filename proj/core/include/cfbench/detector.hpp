#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfbench/autograd.hpp"
#include "cfbench/logit_model.hpp"
#include "cfbench/tensor.hpp"

namespace cfb {

enum class Family { BS_like, BCplus_like, VGG_like };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);

struct ArchitectureSpec {
  Family family = Family::BS_like;
  int patch_extent = 32;
  std::vector<int> channels;  // per-conv output widths, family defaults
  bool constrained_first_layer = false;

  static ArchitectureSpec for_family(Family f, int patch_extent = 32);
};

struct LayerDesc {
  enum class Kind { conv, pool, relu, dense } kind;
  // conv
  int in_ch = 0, out_ch = 0, ksize = 0, stride = 1, pad = 0;
  bool has_bias = true;
  bool constrained = false;
  // dense
  int in_n = 0, out_n = 0;
};

struct TrainingFingerprint {
  std::string manifest_hash;  // empty until trained
  std::uint64_t seed = 0;
  int epochs = 0;
};

/// Architecture plus named weights; maps a grayscale patch to two logits.
class DetectorModel : public LogitModel {
 public:
  ArchitectureSpec spec;
  std::vector<LayerDesc> layers;
  std::vector<std::string> weight_names;
  std::vector<Tensor> weights;
  TrainingFingerprint fingerprint;

  /// Deterministic He-style uniform init from the seed; the constrained
  /// first layer is projected immediately when flagged.
  static DetectorModel build(const ArchitectureSpec& spec, std::uint64_t seed);

  /// Forward pass on an existing tape; input must be [1,E,E]. When
  /// weight_nodes is given it receives the leaf ids of the weights in
  /// declaration order (for reading gradients back out).
  Tape::NodeId forward(Tape& tape, Tape::NodeId input,
                       std::vector<Tape::NodeId>* weight_nodes = nullptr) const;

  std::array<float, 2> logits(const Tensor& x) const override;
  float margin_with_grad(const Tensor& x, int source_label, Tensor& grad) const override;

  /// Re-project the constrained first layer (no-op when not flagged).
  void project();

  std::uint64_t weight_hash() const;
};

/// Per filter: center tap forced to -1, the 24 off-center taps rescaled
/// to sum to +1; zero off-center mass resets to the uniform 1/24 stencil.
void project_constrained_layer(Tensor& kernels);

/// Weight file: magic "MMFT", u16 version, u32 JSON header length, JSON
/// header, then tensors as little-endian f32 in declaration order.
void save_model(const DetectorModel& model, const std::string& path);
DetectorModel load_model(const std::string& path);

}  // namespace cfb
