#include "cfbench/autograd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cfb {

namespace {

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw std::runtime_error(std::string(op) + ": non-finite values");
}

}  // namespace

Tape::NodeId Tape::push(Tensor value, std::function<void()> back) {
  Node n;
  n.owned = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(Tensor v) { return push(std::move(v), {}); }

Tape::NodeId Tape::leaf_ref(const Tensor* v) {
  Node n;
  n.ext = v;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tensor& Tape::adjoint(NodeId id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.has_adj) {
    n.adj = Tensor::zeros(val(id).shape);
    n.has_adj = true;
  }
  return n.adj;
}

Tensor Tape::grad(NodeId id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (n.has_adj) return n.adj;
  return Tensor::zeros(val(id).shape);
}

void Tape::backward(NodeId loss) {
  const Tensor& lv = val(loss);
  if (lv.size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  adjoint(loss)[0] = 1.0f;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.has_adj && n.back) n.back();
  }
}

Tape::NodeId Tape::conv2d(NodeId x, NodeId kernels, int stride, int padding) {
  const Tensor& in = val(x);
  const Tensor& k = val(kernels);
  if (in.rank() != 3 || k.rank() != 4)
    throw std::invalid_argument("conv2d: expected input [C,H,W] and kernels [Co,Ci,kh,kw], got " +
                                in.shape_str() + " and " + k.shape_str());
  const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const int co = k.dim(0), kci = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  if (kci != ci)
    throw std::invalid_argument("conv2d: input channels " + std::to_string(ci) +
                                " != kernel channels " + std::to_string(kci));
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
  if (kh > h + 2 * padding || kw > w + 2 * padding)
    throw std::invalid_argument("conv2d: kernel " + k.shape_str() + " larger than padded input " +
                                in.shape_str());
  const int ho = (h + 2 * padding - kh) / stride + 1;
  const int wo = (w + 2 * padding - kw) / stride + 1;

  // accumulate in double, round once into the fp32 output
  std::vector<double> acc(static_cast<size_t>(co) * ho * wo, 0.0);
  for (int oc = 0; oc < co; ++oc)
    for (int ic = 0; ic < ci; ++ic)
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx) {
          const float wv = k.data[((static_cast<size_t>(oc) * ci + ic) * kh + ky) * kw + kx];
          if (wv == 0.0f) continue;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= h) continue;
            const float* inrow = &in.data[(static_cast<size_t>(ic) * h + iy) * w];
            double* outrow = &acc[(static_cast<size_t>(oc) * ho + oy) * wo];
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= w) continue;
              outrow[ox] += static_cast<double>(wv) * inrow[ix];
            }
          }
        }
  Tensor out({co, ho, wo});
  for (size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i]);
  check_finite(out, "conv2d");

  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, kernels, y, stride, padding, ci, h, w, co, kh, kw, ho, wo]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    const Tensor& in = val(x);
    const Tensor& k = val(kernels);
    Tensor& dx = adjoint(x);
    Tensor& dk = adjoint(kernels);
    for (int oc = 0; oc < co; ++oc)
      for (int ic = 0; ic < ci; ++ic)
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const size_t widx = ((static_cast<size_t>(oc) * ci + ic) * kh + ky) * kw + kx;
            const float wv = k.data[widx];
            float wacc = 0.0f;
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= h) continue;
              const float* inrow = &in.data[(static_cast<size_t>(ic) * h + iy) * w];
              float* dxrow = &dx.data[(static_cast<size_t>(ic) * h + iy) * w];
              const float* dyrow = &dy.data[(static_cast<size_t>(oc) * ho + oy) * wo];
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= w) continue;
                const float g = dyrow[ox];
                dxrow[ix] += wv * g;
                wacc += inrow[ix] * g;
              }
            }
            dk.data[widx] += wacc;
          }
  };
  return y;
}

Tape::NodeId Tape::bias_channels(NodeId x, NodeId bias) {
  const Tensor& in = val(x);
  const Tensor& b = val(bias);
  if (in.rank() != 3 || b.rank() != 1 || b.dim(0) != in.dim(0))
    throw std::invalid_argument("bias_channels: input " + in.shape_str() + " vs bias " +
                                b.shape_str());
  const int c = in.dim(0);
  const std::int64_t plane = static_cast<std::int64_t>(in.dim(1)) * in.dim(2);
  Tensor out = in;
  for (int ch = 0; ch < c; ++ch)
    for (std::int64_t i = 0; i < plane; ++i) out.data[ch * plane + i] += b[ch];

  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, bias, y, c, plane]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    Tensor& dx = adjoint(x);
    Tensor& db = adjoint(bias);
    for (std::int64_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    for (int ch = 0; ch < c; ++ch) {
      float acc = 0.0f;
      for (std::int64_t i = 0; i < plane; ++i) acc += dy[ch * plane + i];
      db[ch] += acc;
    }
  };
  return y;
}

Tape::NodeId Tape::maxpool2(NodeId x) {
  const Tensor& in = val(x);
  if (in.rank() != 3) throw std::invalid_argument("maxpool2: expected [C,H,W], got " + in.shape_str());
  const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("maxpool2: extents must be even, got " + in.shape_str());
  const int ho = h / 2, wo = w / 2;
  Tensor out({c, ho, wo});
  // argmax per output cell; first in row-major window order on ties
  std::vector<std::int64_t> arg(static_cast<size_t>(out.size()));
  for (int ch = 0; ch < c; ++ch)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        float best = -std::numeric_limits<float>::infinity();
        std::int64_t bi = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::int64_t idx =
                (static_cast<std::int64_t>(ch) * h + (2 * oy + dy)) * w + (2 * ox + dx);
            const float v = in[idx];
            if (v > best) {
              best = v;
              bi = idx;
            }
          }
        const std::int64_t oidx = (static_cast<std::int64_t>(ch) * ho + oy) * wo + ox;
        out[oidx] = best;
        arg[static_cast<size_t>(oidx)] = bi;
      }

  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, y, arg = std::move(arg)]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    Tensor& dx = adjoint(x);
    for (std::int64_t i = 0; i < dy.size(); ++i) dx[arg[static_cast<size_t>(i)]] += dy[i];
  };
  return y;
}

Tape::NodeId Tape::dense(NodeId x, NodeId weights, NodeId bias) {
  const Tensor& in = val(x);
  const Tensor& w = val(weights);
  const Tensor& b = val(bias);
  if (w.rank() != 2)
    throw std::invalid_argument("dense: weights must be [m,n], got " + w.shape_str());
  const int m = w.dim(0), n = w.dim(1);
  if (in.size() != n)
    throw std::invalid_argument("dense: input size " + std::to_string(in.size()) +
                                " != weight columns " + std::to_string(n));
  if (b.size() != m)
    throw std::invalid_argument("dense: bias size " + std::to_string(b.size()) + " != rows " +
                                std::to_string(m));
  Tensor out({m});
  for (int j = 0; j < m; ++j) {
    const float* wr = &w.data[static_cast<size_t>(j) * n];
    double acc = b[j];  // double accumulation, one rounding per output
    for (int i = 0; i < n; ++i) acc += static_cast<double>(wr[i]) * in[i];
    out[j] = static_cast<float>(acc);
  }
  check_finite(out, "dense");

  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, weights, bias, y, m, n]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    const Tensor& in = val(x);
    const Tensor& w = val(weights);
    Tensor& dx = adjoint(x);
    Tensor& dw = adjoint(weights);
    Tensor& db = adjoint(bias);
    for (int j = 0; j < m; ++j) {
      const float g = dy[j];
      db[j] += g;
      if (g == 0.0f) continue;
      const float* wr = &w.data[static_cast<size_t>(j) * n];
      float* dwr = &dw.data[static_cast<size_t>(j) * n];
      for (int i = 0; i < n; ++i) {
        dx[i] += wr[i] * g;
        dwr[i] += in[i] * g;
      }
    }
  };
  return y;
}

Tape::NodeId Tape::relu(NodeId x) {
  const Tensor& in = val(x);
  Tensor out = in;
  for (auto& v : out.data) v = v > 0.0f ? v : 0.0f;
  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, y]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    const Tensor& in = val(x);
    Tensor& dx = adjoint(x);
    for (std::int64_t i = 0; i < dy.size(); ++i)
      if (in[i] > 0.0f) dx[i] += dy[i];
  };
  return y;
}

Tape::NodeId Tape::tanh_map(NodeId x) {
  const Tensor& in = val(x);
  Tensor out = in;
  for (auto& v : out.data) v = std::tanh(v);
  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, y]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    const Tensor& t = val(y);
    Tensor& dx = adjoint(x);
    for (std::int64_t i = 0; i < dy.size(); ++i) dx[i] += (1.0f - t[i] * t[i]) * dy[i];
  };
  return y;
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits, int label) {
  const Tensor& z = val(logits);
  if (z.size() != 2) throw std::invalid_argument("softmax_cross_entropy: expected 2 logits");
  if (label != 0 && label != 1) throw std::invalid_argument("softmax_cross_entropy: label must be 0 or 1");
  const float mx = z[0] > z[1] ? z[0] : z[1];
  const double e0 = std::exp(static_cast<double>(z[0] - mx));
  const double e1 = std::exp(static_cast<double>(z[1] - mx));
  const double lse = std::log(e0 + e1);
  const double loss = lse - static_cast<double>(z[label] - mx);
  Tensor out = Tensor::scalar(static_cast<float>(loss));

  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, logits, label, y]() {
    const float g = nodes_[static_cast<size_t>(y)].adj[0];
    const Tensor& z = val(logits);
    const float mx = z[0] > z[1] ? z[0] : z[1];
    const double e0 = std::exp(static_cast<double>(z[0] - mx));
    const double e1 = std::exp(static_cast<double>(z[1] - mx));
    const double s = e0 + e1;
    Tensor& dz = adjoint(logits);
    dz[0] += g * static_cast<float>(e0 / s - (label == 0 ? 1.0 : 0.0));
    dz[1] += g * static_cast<float>(e1 / s - (label == 1 ? 1.0 : 0.0));
  };
  return y;
}

Tape::NodeId Tape::logit_margin(NodeId logits, int source_label) {
  const Tensor& z = val(logits);
  if (z.size() != 2) throw std::invalid_argument("logit_margin: expected 2 logits");
  if (source_label != 0 && source_label != 1)
    throw std::invalid_argument("logit_margin: label must be 0 or 1");
  const int i = source_label;
  Tensor out = Tensor::scalar(z[1 - i] - z[i]);
  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, logits, i, y]() {
    const float g = nodes_[static_cast<size_t>(y)].adj[0];
    Tensor& dz = adjoint(logits);
    dz[1 - i] += g;
    dz[i] -= g;
  };
  return y;
}

Tape::NodeId Tape::sum(NodeId x) {
  const Tensor& in = val(x);
  double acc = 0.0;
  for (float v : in.data) acc += v;
  NodeId y = push(Tensor::scalar(static_cast<float>(acc)), {});
  nodes_.back().back = [this, x, y]() {
    const float g = nodes_[static_cast<size_t>(y)].adj[0];
    Tensor& dx = adjoint(x);
    for (auto& v : dx.data) v += g;
  };
  return y;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, a, b, y]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    Tensor& da = adjoint(a);
    Tensor& db = adjoint(b);
    for (std::int64_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] -= dy[i];
    }
  };
  return y;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, a, b, y]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    Tensor& da = adjoint(a);
    Tensor& db = adjoint(b);
    for (std::int64_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  };
  return y;
}

Tape::NodeId Tape::affine(NodeId x, float mul, float shift) {
  const Tensor& in = val(x);
  Tensor out = in;
  for (auto& v : out.data) v = mul * v + shift;
  NodeId y = push(std::move(out), {});
  nodes_.back().back = [this, x, y, mul]() {
    const Tensor& dy = nodes_[static_cast<size_t>(y)].adj;
    Tensor& dx = adjoint(x);
    for (std::int64_t i = 0; i < dy.size(); ++i) dx[i] += mul * dy[i];
  };
  return y;
}

Tape::NodeId Tape::square_sum(NodeId x) {
  const Tensor& in = val(x);
  double acc = 0.0;
  for (float v : in.data) acc += static_cast<double>(v) * v;
  NodeId y = push(Tensor::scalar(static_cast<float>(acc)), {});
  nodes_.back().back = [this, x, y]() {
    const float g = nodes_[static_cast<size_t>(y)].adj[0];
    const Tensor& in = val(x);
    Tensor& dx = adjoint(x);
    for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += 2.0f * in[i] * g;
  };
  return y;
}

}  // namespace cfb
