#include "cfbench/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cfbench/pgm.hpp"
#include "cfbench/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cfb {

namespace {

const char* kSplits[] = {"train", "val", "test"};

GrayImage crop(const GrayImage& img, int oy, int ox, int size) {
  GrayImage out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.at(y, x) = img.at(oy + y, ox + x);
  return out;
}

}  // namespace

GrayImage ManipulationSpec::apply(const GrayImage& img) const {
  if (type == "median") return median_filter(img, k);
  if (type == "resize") return downsample(img, factor);
  throw std::invalid_argument("unknown manipulation type '" + type + "'");
}

DatasetManifest DatasetManifest::from_json_text(const std::string& text) {
  json j = json::parse(text);
  DatasetManifest m;
  m.patch_size = j.at("patch_size").get<int>();
  const json& man = j.at("manipulation");
  m.manipulation.type = man.at("type").get<std::string>();
  if (m.manipulation.type == "median")
    m.manipulation.k = man.at("k").get<int>();
  else if (m.manipulation.type == "resize")
    m.manipulation.factor = man.at("factor").get<double>();
  else
    throw std::invalid_argument("manifest: unknown manipulation type '" + m.manipulation.type + "'");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.style = j.value("style", std::string("A"));
  m.source_dir = j.value("source_dir", std::string());
  m.n_images = j.value("n_images", m.n_images);
  m.image_extent = j.value("image_extent", m.image_extent);
  m.per_image_cap = j.value("per_image_cap", m.per_image_cap);
  m.degenerate = j.value("degenerate", false);
  if (j.contains("splits")) {
    m.split_images.clear();
    for (const auto& [name, v] : j.at("splits").items()) {
      if (v.is_array()) {
        m.split_assignment[name] = v.get<std::vector<int>>();
        m.split_images[name] = static_cast<int>(m.split_assignment[name].size());
      } else {
        m.split_images[name] = v.get<int>();
      }
    }
  }
  return m;
}

std::string DatasetManifest::to_json_text() const {
  json j;
  j["patch_size"] = patch_size;
  if (manipulation.type == "median")
    j["manipulation"] = {{"type", "median"}, {"k", manipulation.k}};
  else
    j["manipulation"] = {{"type", "resize"}, {"factor", manipulation.factor}};
  j["seed"] = seed;
  j["style"] = style;
  if (!source_dir.empty()) j["source_dir"] = source_dir;
  j["n_images"] = n_images;
  j["image_extent"] = image_extent;
  j["per_image_cap"] = per_image_cap;
  j["degenerate"] = degenerate;
  json splits;
  if (!split_assignment.empty()) {
    for (const auto& [name, ids] : split_assignment) splits[name] = ids;
  } else {
    for (const auto& [name, count] : split_images) splits[name] = count;
  }
  j["splits"] = splits;
  return j.dump(2) + "\n";
}

std::string manifest_hash(const DatasetManifest& m) {
  const std::string text = m.to_json_text();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset build_dataset(const std::vector<SourceImage>& corpus, DatasetManifest manifest) {
  int needed = 0;
  for (const auto& s : kSplits) {
    auto it = manifest.split_images.find(s);
    if (it == manifest.split_images.end())
      throw std::invalid_argument(std::string("manifest: missing split '") + s + "'");
    needed += it->second;
  }
  if (static_cast<int>(corpus.size()) < needed)
    throw std::invalid_argument("build_dataset: corpus has " + std::to_string(corpus.size()) +
                                " images, need " + std::to_string(needed) + " (train " +
                                std::to_string(manifest.split_images.at("train")) + ", val " +
                                std::to_string(manifest.split_images.at("val")) + ", test " +
                                std::to_string(manifest.split_images.at("test")) + ")");

  // split by source_id; shuffled once from the master seed
  std::vector<int> ids(corpus.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = corpus[i].source_id;
  std::mt19937_64 split_rng(derive_seed(manifest.seed, 0xA55));
  shuffle_indices(ids, split_rng);
  manifest.split_assignment.clear();
  size_t cursor = 0;
  for (const auto& s : kSplits) {
    const int n = manifest.split_images.at(s);
    std::vector<int> take(ids.begin() + cursor, ids.begin() + cursor + n);
    std::sort(take.begin(), take.end());
    manifest.split_assignment[s] = std::move(take);
    cursor += static_cast<size_t>(n);
  }

  std::map<int, const SourceImage*> by_id;
  for (const auto& src : corpus) by_id[src.source_id] = &src;

  const int ps = manifest.patch_size;
  Dataset ds;
  bool any_diff = false;
  for (const auto& sname : kSplits) {
    auto& records = ds.splits[sname];
    for (int id : manifest.split_assignment[sname]) {
      const GrayImage& orig = by_id.at(id)->image;
      const GrayImage manip = manifest.manipulation.apply(orig);
      if (manip.height < ps || manip.width < ps)
        throw std::invalid_argument("build_dataset: source " + std::to_string(id) +
                                    " too small for patch size after manipulation");
      const int ry = manip.height - ps + 1;
      const int rx = manip.width - ps + 1;

      // random non-overlapping offsets, per-image stream from the master seed
      std::mt19937_64 rng(derive_seed(manifest.seed, 0x1000 + static_cast<std::uint64_t>(id)));
      std::vector<std::pair<int, int>> offsets;
      const int max_attempts = manifest.per_image_cap * 40;
      for (int a = 0; a < max_attempts && static_cast<int>(offsets.size()) < manifest.per_image_cap;
           ++a) {
        const int oy = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(ry)));
        const int ox = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(rx)));
        bool overlaps = false;
        for (const auto& [py, px] : offsets) {
          if (std::abs(py - oy) < ps && std::abs(px - ox) < ps) {
            overlaps = true;
            break;
          }
        }
        if (!overlaps) offsets.emplace_back(oy, ox);
      }

      for (size_t pi = 0; pi < offsets.size(); ++pi) {
        const auto [oy, ox] = offsets[pi];
        PatchRecord pristine;
        pristine.patch = quantize8(crop(orig, oy, ox, ps));
        pristine.label = 0;
        pristine.source_id = id;
        pristine.patch_idx = static_cast<int>(pi);
        PatchRecord manipulated;
        manipulated.patch = quantize8(crop(manip, oy, ox, ps));
        manipulated.label = 1;
        manipulated.source_id = id;
        manipulated.patch_idx = static_cast<int>(pi);
        if (manipulated.patch.pixels != pristine.patch.pixels) any_diff = true;
        records.push_back(std::move(pristine));
        records.push_back(std::move(manipulated));
      }
    }
  }
  manifest.degenerate = !any_diff;
  ds.manifest = std::move(manifest);
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& root) {
  for (const auto& sname : kSplits) {
    // drop stale patches: re-saving into an existing root must not merge
    fs::remove_all(fs::path(root) / sname);
    for (int label = 0; label < 2; ++label)
      fs::create_directories(fs::path(root) / sname / std::to_string(label));
  }
  for (const auto& [sname, records] : ds.splits) {
    for (const auto& r : records) {
      const fs::path p = fs::path(root) / sname / std::to_string(r.label) /
                         (std::to_string(r.source_id) + "_" + std::to_string(r.patch_idx) + ".pgm");
      save_pgm(r.patch, p.string());
    }
  }
  std::ofstream mf(fs::path(root) / "manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("save_dataset: cannot write manifest under " + root);
  mf << ds.manifest.to_json_text();
}

Dataset load_dataset(const std::string& root) {
  std::ifstream mf(fs::path(root) / "manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("load_dataset: missing manifest.json under " + root);
  std::string text((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
  Dataset ds;
  ds.manifest = DatasetManifest::from_json_text(text);
  for (const auto& sname : kSplits) {
    auto& records = ds.splits[sname];
    for (int label = 0; label < 2; ++label) {
      const fs::path dir = fs::path(root) / sname / std::to_string(label);
      if (!fs::is_directory(dir)) continue;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        PatchRecord r;
        r.patch = load_pgm(f.string());
        r.label = label;
        const std::string stem = f.stem().string();
        const auto us = stem.find('_');
        if (us == std::string::npos)
          throw std::runtime_error("load_dataset: unexpected patch filename " + f.string());
        r.source_id = std::stoi(stem.substr(0, us));
        r.patch_idx = std::stoi(stem.substr(us + 1));
        records.push_back(std::move(r));
      }
    }
  }
  return ds;
}

}  // namespace cfb
