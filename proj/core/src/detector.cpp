#include "cfbench/detector.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cfbench/rng.hpp"
#include "json.hpp"

using nlohmann::json;

namespace cfb {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'F', 'T'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

Family family_from_string(const std::string& s) {
  if (s == "bs_like" || s == "bs") return Family::BS_like;
  if (s == "bcplus_like" || s == "bcplus") return Family::BCplus_like;
  if (s == "vgg_like" || s == "vgg") return Family::VGG_like;
  throw std::invalid_argument("unknown architecture family '" + s + "'");
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::BS_like: return "bs_like";
    case Family::BCplus_like: return "bcplus_like";
    case Family::VGG_like: return "vgg_like";
  }
  return "?";
}

ArchitectureSpec ArchitectureSpec::for_family(Family f, int patch_extent) {
  ArchitectureSpec s;
  s.family = f;
  s.patch_extent = patch_extent;
  switch (f) {
    case Family::BS_like:
      s.channels = {4, 8, 16};
      s.constrained_first_layer = true;
      break;
    case Family::BCplus_like:
      s.channels = {8, 8, 16, 16, 32};
      s.constrained_first_layer = false;
      break;
    case Family::VGG_like:
      s.channels = {4, 4, 8, 8, 16, 16};
      s.constrained_first_layer = false;
      break;
  }
  return s;
}

void project_constrained_layer(Tensor& kernels) {
  if (kernels.rank() != 4 || kernels.dim(1) != 1 || kernels.dim(2) != 5 || kernels.dim(3) != 5)
    throw std::invalid_argument("project_constrained_layer: expected [C,1,5,5], got " +
                                kernels.shape_str());
  const int c = kernels.dim(0);
  for (int f = 0; f < c; ++f) {
    float* k = &kernels.data[static_cast<size_t>(f) * 25];
    double off_sum = 0.0;
    for (int i = 0; i < 25; ++i)
      if (i != 12) off_sum += k[i];
    if (std::abs(off_sum) < 1e-12) {
      for (int i = 0; i < 25; ++i) k[i] = 1.0f / 24.0f;
    } else {
      const float scale = static_cast<float>(1.0 / off_sum);
      for (int i = 0; i < 25; ++i) k[i] *= scale;
    }
    k[12] = -1.0f;
  }
}

DetectorModel DetectorModel::build(const ArchitectureSpec& spec, std::uint64_t seed) {
  DetectorModel m;
  m.spec = spec;

  struct ConvPlan {
    int out_ch, ksize, stride, pad;
    bool constrained, relu_after, pool_after;
  };
  std::vector<ConvPlan> convs;
  std::vector<int> dense_widths;  // hidden widths before the 2-logit output
  const auto& ch = spec.channels;
  switch (spec.family) {
    case Family::BS_like:
      convs = {{ch[0], 5, 1, 2, true, false, true},
               {ch[1], 3, 1, 1, false, true, true},
               {ch[2], 3, 1, 1, false, true, false}};
      dense_widths = {128};
      break;
    case Family::BCplus_like:
      convs = {{ch[0], 3, 1, 1, false, true, false},
               {ch[1], 3, 2, 1, false, true, false},
               {ch[2], 3, 2, 1, false, true, false},
               {ch[3], 3, 1, 1, false, true, false},
               {ch[4], 3, 2, 1, false, true, false}};
      dense_widths = {};
      break;
    case Family::VGG_like:
      convs = {{ch[0], 3, 1, 1, false, true, false}, {ch[1], 3, 1, 1, false, true, true},
               {ch[2], 3, 1, 1, false, true, false}, {ch[3], 3, 1, 1, false, true, true},
               {ch[4], 3, 1, 1, false, true, false}, {ch[5], 3, 1, 1, false, true, true}};
      dense_widths = {256};
      break;
  }

  int extent = spec.patch_extent;
  int cur_ch = 1;
  int conv_idx = 0;
  for (const auto& cp : convs) {
    LayerDesc conv;
    conv.kind = LayerDesc::Kind::conv;
    conv.in_ch = cur_ch;
    conv.out_ch = cp.out_ch;
    conv.ksize = cp.ksize;
    conv.stride = cp.stride;
    conv.pad = cp.pad;
    conv.constrained = cp.constrained;
    conv.has_bias = !cp.constrained;
    m.layers.push_back(conv);
    extent = (extent + 2 * cp.pad - cp.ksize) / cp.stride + 1;
    cur_ch = cp.out_ch;

    m.weight_names.push_back("conv" + std::to_string(conv_idx) + ".w");
    m.weights.push_back(Tensor({cp.out_ch, conv.in_ch, cp.ksize, cp.ksize}));
    if (conv.has_bias) {
      m.weight_names.push_back("conv" + std::to_string(conv_idx) + ".b");
      m.weights.push_back(Tensor({cp.out_ch}));
    }
    ++conv_idx;

    if (cp.relu_after) m.layers.push_back({LayerDesc::Kind::relu});
    if (cp.pool_after) {
      if (extent % 2 != 0)
        throw std::invalid_argument("architecture: odd extent " + std::to_string(extent) +
                                    " before pooling; patch extent unsupported");
      m.layers.push_back({LayerDesc::Kind::pool});
      extent /= 2;
    }
  }

  int flat = cur_ch * extent * extent;
  int fc_idx = 0;
  for (int wdt : dense_widths) {
    LayerDesc d;
    d.kind = LayerDesc::Kind::dense;
    d.in_n = flat;
    d.out_n = wdt;
    m.layers.push_back(d);
    m.layers.push_back({LayerDesc::Kind::relu});
    m.weight_names.push_back("fc" + std::to_string(fc_idx) + ".w");
    m.weights.push_back(Tensor({wdt, flat}));
    m.weight_names.push_back("fc" + std::to_string(fc_idx) + ".b");
    m.weights.push_back(Tensor({wdt}));
    flat = wdt;
    ++fc_idx;
  }
  LayerDesc out;
  out.kind = LayerDesc::Kind::dense;
  out.in_n = flat;
  out.out_n = 2;
  m.layers.push_back(out);
  m.weight_names.push_back("fc" + std::to_string(fc_idx) + ".w");
  m.weights.push_back(Tensor({2, flat}));
  m.weight_names.push_back("fc" + std::to_string(fc_idx) + ".b");
  m.weights.push_back(Tensor({2}));

  // He-style uniform fan-in init; biases stay zero
  for (size_t wi = 0; wi < m.weights.size(); ++wi) {
    Tensor& t = m.weights[wi];
    if (t.rank() < 2) continue;  // bias
    std::int64_t fan_in = 1;
    for (int d = 1; d < t.rank(); ++d) fan_in *= t.dim(d);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::mt19937_64 rng(derive_seed(seed, wi));
    for (auto& v : t.data) v = static_cast<float>(uniform(rng, -limit, limit));
  }
  m.project();
  return m;
}

void DetectorModel::project() {
  if (!spec.constrained_first_layer) return;
  project_constrained_layer(weights[0]);
}

Tape::NodeId DetectorModel::forward(Tape& tape, Tape::NodeId input,
                                    std::vector<Tape::NodeId>* weight_nodes) const {
  const Tensor& in = tape.value(input);
  if (in.rank() != 3 || in.dim(0) != 1 || in.dim(1) != spec.patch_extent ||
      in.dim(2) != spec.patch_extent)
    throw std::invalid_argument("forward: expected [1," + std::to_string(spec.patch_extent) + "," +
                                std::to_string(spec.patch_extent) + "] input, got " +
                                in.shape_str());
  Tape::NodeId cur = input;
  size_t wi = 0;
  auto next_weight = [&]() {
    Tape::NodeId id = tape.leaf_ref(&weights[wi++]);
    if (weight_nodes) weight_nodes->push_back(id);
    return id;
  };
  for (const auto& layer : layers) {
    switch (layer.kind) {
      case LayerDesc::Kind::conv: {
        Tape::NodeId w = next_weight();
        cur = tape.conv2d(cur, w, layer.stride, layer.pad);
        if (layer.has_bias) {
          Tape::NodeId b = next_weight();
          cur = tape.bias_channels(cur, b);
        }
        break;
      }
      case LayerDesc::Kind::pool:
        cur = tape.maxpool2(cur);
        break;
      case LayerDesc::Kind::relu:
        cur = tape.relu(cur);
        break;
      case LayerDesc::Kind::dense: {
        Tape::NodeId w = next_weight();
        Tape::NodeId b = next_weight();
        cur = tape.dense(cur, w, b);
        break;
      }
    }
  }
  return cur;
}

std::array<float, 2> DetectorModel::logits(const Tensor& x) const {
  Tape tape;
  Tape::NodeId in = tape.leaf_ref(&x);
  Tape::NodeId out = forward(tape, in);
  const Tensor& z = tape.value(out);
  return {z[0], z[1]};
}

float DetectorModel::margin_with_grad(const Tensor& x, int source_label, Tensor& grad) const {
  Tape tape;
  Tape::NodeId in = tape.leaf_ref(&x);
  Tape::NodeId out = forward(tape, in);
  Tape::NodeId m = tape.logit_margin(out, source_label);
  tape.backward(m);
  grad = tape.grad(in);
  return tape.value(m)[0];
}

std::uint64_t DetectorModel::weight_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : weights) {
    for (float v : t.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      for (int b = 0; b < 4; ++b) h = (h ^ ((bits >> (8 * b)) & 0xff)) * 0x100000001b3ULL;
    }
  }
  return h;
}

void save_model(const DetectorModel& model, const std::string& path) {
  json hdr;
  hdr["family"] = family_to_string(model.spec.family);
  hdr["patch_extent"] = model.spec.patch_extent;
  hdr["channels"] = model.spec.channels;
  hdr["constrained_first_layer"] = model.spec.constrained_first_layer;
  json tensors = json::array();
  for (size_t i = 0; i < model.weights.size(); ++i)
    tensors.push_back({{"name", model.weight_names[i]}, {"shape", model.weights[i].shape}});
  hdr["tensors"] = tensors;
  hdr["fingerprint"] = {{"manifest_hash", model.fingerprint.manifest_hash},
                        {"seed", model.fingerprint.seed},
                        {"epochs", model.fingerprint.epochs}};
  const std::string htext = hdr.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write(kMagic, 4);
  const std::uint16_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), 2);
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& t : model.weights)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * 4));
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

DetectorModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_model: " + path + ": bad magic, expected MMFT");
  std::uint16_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), 2);
  if (ver != kVersion)
    throw std::runtime_error("load_model: " + path + ": version mismatch, file has " +
                             std::to_string(ver) + ", expected " + std::to_string(kVersion));
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (static_cast<std::uint32_t>(in.gcount()) != hlen)
    throw std::runtime_error("load_model: " + path + ": truncated header");
  json hdr;
  try {
    hdr = json::parse(htext);
  } catch (const std::exception& e) {
    throw std::runtime_error("load_model: " + path + ": bad header JSON: " + e.what());
  }

  ArchitectureSpec spec;
  spec.family = family_from_string(hdr.at("family").get<std::string>());
  spec.patch_extent = hdr.at("patch_extent").get<int>();
  spec.channels = hdr.at("channels").get<std::vector<int>>();
  spec.constrained_first_layer = hdr.at("constrained_first_layer").get<bool>();

  DetectorModel m = DetectorModel::build(spec, 0);
  const json& tensors = hdr.at("tensors");
  if (tensors.size() != m.weights.size())
    throw std::runtime_error("load_model: " + path + ": tensor count mismatch");
  for (size_t i = 0; i < m.weights.size(); ++i) {
    if (tensors[i].at("name").get<std::string>() != m.weight_names[i] ||
        tensors[i].at("shape").get<std::vector<int>>() != m.weights[i].shape)
      throw std::runtime_error("load_model: " + path + ": tensor layout mismatch at '" +
                               m.weight_names[i] + "'");
    in.read(reinterpret_cast<char*>(m.weights[i].data.data()),
            static_cast<std::streamsize>(m.weights[i].data.size() * 4));
    if (static_cast<size_t>(in.gcount()) != m.weights[i].data.size() * 4)
      throw std::runtime_error("load_model: " + path + ": truncated tensor data at '" +
                               m.weight_names[i] + "'");
  }
  const auto& fp = hdr.at("fingerprint");
  m.fingerprint.manifest_hash = fp.at("manifest_hash").get<std::string>();
  m.fingerprint.seed = fp.at("seed").get<std::uint64_t>();
  m.fingerprint.epochs = fp.at("epochs").get<int>();
  return m;
}

}  // namespace cfb
