#pragma once

#include <functional>
#include <vector>

#include "cfbench/tensor.hpp"

namespace cfb {

/// Append-only record of primitive applications. Node ids are creation
/// order, so reverse id order is a valid reverse topological order for
/// the adjoint sweep. One tape is built per forward evaluation and
/// discarded afterwards.
class Tape {
 public:
  using NodeId = int;

  /// Leaf owning a copy of the value.
  NodeId leaf(Tensor v);
  /// Leaf referencing external storage; *v must outlive the tape.
  /// Used for model weights and attack inputs so per-sample tapes do
  /// not copy parameters.
  NodeId leaf_ref(const Tensor* v);

  const Tensor& value(NodeId id) const { return val(id); }

  /// Adjoint of `id` after backward(); zeros if `id` is not an ancestor
  /// of the loss.
  Tensor grad(NodeId id) const;

  // Primitives. Cross-correlation semantics for conv2d (no kernel flip).
  NodeId conv2d(NodeId x, NodeId kernels, int stride, int padding);
  NodeId bias_channels(NodeId x, NodeId bias);
  NodeId maxpool2(NodeId x);
  NodeId dense(NodeId x, NodeId weights, NodeId bias);
  NodeId relu(NodeId x);
  NodeId tanh_map(NodeId x);
  NodeId softmax_cross_entropy(NodeId logits, int label);
  NodeId logit_margin(NodeId logits, int source_label);
  NodeId sum(NodeId x);
  NodeId sub(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId affine(NodeId x, float mul, float shift);
  NodeId square_sum(NodeId x);

  /// Reverse sweep from a scalar loss node. Each reachable node is
  /// visited exactly once.
  void backward(NodeId loss);

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    const Tensor* ext = nullptr;  // external storage (leaf_ref); else `owned`
    Tensor owned;                 // storage when the node owns its value
    Tensor adj;                   // lazily allocated adjoint
    bool has_adj = false;
    std::function<void()> back;  // empty for leaves
  };

  NodeId push(Tensor value, std::function<void()> back);
  Tensor& adjoint(NodeId id);
  // resolved per call: nodes_ may reallocate as the tape grows
  const Tensor& val(NodeId id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.ext ? *n.ext : n.owned;
  }

  std::vector<Node> nodes_;
};

}  // namespace cfb
