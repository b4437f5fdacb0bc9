#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fashioncut/pattern.hpp"

namespace fashioncut {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ManifestRow {
  std::string path;  // relative to the manifest's directory
  int class_id = 0;
  std::string class_name;
  DomainStyle::Tag domain = DomainStyle::Tag::kSource;
  uint64_t seed = 0;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  int image_size = 0;
  std::string generator_version;
  std::string root_dir;  // directory holding manifest.csv

  // balance + decodability; throws DataError on violation
  void validate(bool check_images = true) const;
  std::string image_path(size_t i) const;
};

inline constexpr const char* kGeneratorVersion = "patterngen-1.0";
inline constexpr const char* kManifestHeader = "path,class_id,class_name,domain,seed";

// Writes 7*per_class images as <out_dir>/<class_name>/<index>.png plus
// manifest.csv. Sample seeds derive from (seed, class_id, index), so any
// subset regenerates identically. Parallel across samples.
DatasetManifest generate_dataset(int per_class, const DomainStyle& domain,
                                 const std::string& out_dir, uint64_t seed, int size);

DatasetManifest load_manifest(const std::string& manifest_csv_path);
void save_manifest(const DatasetManifest& m);

// In-memory labeled pool (source training data and eval sets).
struct LabeledData {
  std::vector<ImageU8> images;
  std::vector<int> labels;
  int image_size = 0;

  static LabeledData load(const DatasetManifest& m);
  size_t size() const { return images.size(); }
};

// Target-domain pool as the trainer sees it: pixels only. Loading drops the
// label columns before they ever reach training code.
struct UnlabeledData {
  std::vector<ImageU8> images;
  int image_size = 0;

  static UnlabeledData load(const DatasetManifest& m);
  static UnlabeledData load_from_csv(const std::string& manifest_csv_path);
  size_t size() const { return images.size(); }
};

}  // namespace fashioncut
