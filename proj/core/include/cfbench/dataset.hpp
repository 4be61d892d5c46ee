#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfbench/corpus.hpp"
#include "cfbench/image.hpp"

namespace cfb {

struct ManipulationSpec {
  std::string type = "median";  // "median" or "resize"
  int k = 5;
  double factor = 0.8;

  GrayImage apply(const GrayImage& img) const;
};

struct DatasetManifest {
  int patch_size = 32;
  ManipulationSpec manipulation;
  std::uint64_t seed = 1;
  std::string style = "A";
  std::string source_dir;  // non-empty: corpus loaded from PGM files
  int n_images = 104;
  int image_extent = 320;
  int per_image_cap = 50;
  // canonical split order: train, val, test
  std::map<std::string, int> split_images = {{"train", 80}, {"val", 12}, {"test", 12}};
  std::map<std::string, std::vector<int>> split_assignment;  // filled by build_dataset
  bool degenerate = false;  // set when manipulated patches equal pristine ones

  static DatasetManifest from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct PatchRecord {
  GrayImage patch;
  int label = 0;  // 0 pristine, 1 manipulated
  int source_id = 0;
  int patch_idx = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::map<std::string, std::vector<PatchRecord>> splits;
};

/// Paired patch extraction: label-1 patches are cut from the manipulated
/// full image at the same offsets as their label-0 counterparts; splits
/// are disjoint by source_id.
Dataset build_dataset(const std::vector<SourceImage>& corpus, DatasetManifest manifest);

/// Layout: <root>/<split>/<label>/<source_id>_<patch_idx>.pgm plus
/// manifest.json at the root.
void save_dataset(const Dataset& ds, const std::string& root);
Dataset load_dataset(const std::string& root);

/// FNV-1a over the serialized manifest; recorded in trained models.
std::string manifest_hash(const DatasetManifest& m);

}  // namespace cfb
