#pragma once

// Affordance samples and the on-disk dataset layout shared by mining and
// training:
//
//   <root>/manifest.json
//     {"labels": ["grasp", "cut", ...],
//      "samples": [{"id", "image", "depth", "masks": {label: path},
//                   "category", "clip_id"}, ...]}
//   images as binary PPM, depth as 8-bit PGM, masks as 0/255 PGM; paths are
//   relative to <root>.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affkit/image.hpp"
#include "affkit/metrics.hpp"

namespace affkit {

struct AffordanceSample {
  RgbImage image;
  DepthMap depth;
  std::map<std::string, geometry::BinaryMask> masks;
  std::string object_category;
  std::string source_clip;
};

// Throws DisjointnessViolation when masks overlap and ShapeMismatch when a
// mask or the depth map differs in size from the image.
void validate_sample(const AffordanceSample& sample);

// Label map with label indices taken from `vocabulary`; masks for labels
// outside the vocabulary are ignored.
LabelMap label_map(const AffordanceSample& sample, const std::vector<std::string>& vocabulary);

struct ManifestRecord {
  std::string id;
  std::string image;
  std::string depth;
  std::map<std::string, std::string> masks;
  std::string category;
  std::string clip_id;
};

// Writes images, depths, masks and manifest.json. Sample ids must be unique.
void write_dataset(const std::filesystem::path& root, const std::vector<std::string>& labels,
                   const std::vector<std::pair<std::string, AffordanceSample>>& samples);

struct DatasetHandle {
  std::filesystem::path root;
  std::vector<std::string> labels;
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
};

// Parses and validates the manifest: every referenced file exists and every
// mask matches its image size. Errors name the offending record index.
DatasetHandle load_dataset(const std::filesystem::path& root);
AffordanceSample load_sample(const DatasetHandle& handle, std::size_t index);

}  // namespace affkit
