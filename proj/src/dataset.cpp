#include "affkit/dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "affkit/error.hpp"

namespace affkit {

namespace fs = std::filesystem;

void validate_sample(const AffordanceSample& s) {
  const int w = s.image.width(), h = s.image.height();
  if (s.depth.width() != w || s.depth.height() != h) throw Error(ErrorCode::kShapeMismatch, "depth size differs from image");
  std::vector<const geometry::BinaryMask*> seen;
  for (const auto& [label, mask] : s.masks) {
    if (mask.width() != w || mask.height() != h)
      throw Error(ErrorCode::kShapeMismatch, "mask '" + label + "' size differs from image");
    for (const auto* other : seen)
      if (!(mask & *other).empty()) throw Error(ErrorCode::kDisjointnessViolation, "mask '" + label + "' overlaps another mask");
    seen.push_back(&mask);
  }
}

LabelMap label_map(const AffordanceSample& sample, const std::vector<std::string>& vocabulary) {
  LabelMap out(sample.image.width(), sample.image.height());
  for (std::size_t l = 0; l < vocabulary.size(); ++l) {
    auto it = sample.masks.find(vocabulary[l]);
    if (it == sample.masks.end()) continue;
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        if (it->second.get(x, y)) out.at(x, y) = static_cast<int>(l);
  }
  return out;
}

void write_dataset(const fs::path& root, const std::vector<std::string>& labels,
                   const std::vector<std::pair<std::string, AffordanceSample>>& samples) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "depth");
  fs::create_directories(root / "masks");
  nlohmann::json records = nlohmann::json::array();
  std::set<std::string> ids;
  for (const auto& [id, s] : samples) {
    if (!ids.insert(id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate sample id " + id);
    validate_sample(s);
    const std::string image = "images/" + id + ".ppm", depth = "depth/" + id + ".pgm";
    write_ppm(root / image, s.image);
    write_pgm(root / depth, s.depth);
    nlohmann::json masks = nlohmann::json::object();
    for (const auto& [label, mask] : s.masks) {
      const std::string path = "masks/" + id + "_" + label + ".pgm";
      write_mask_pgm(root / path, mask);
      masks[label] = path;
    }
    records.push_back({{"id", id},
                       {"image", image},
                       {"depth", depth},
                       {"masks", masks},
                       {"category", s.object_category},
                       {"clip_id", s.source_clip}});
  }
  const nlohmann::json manifest = {{"labels", labels}, {"samples", records}};
  std::ofstream out(root / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write manifest in " + root.string());
  out << manifest.dump(2) << "\n";
}

DatasetHandle load_dataset(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kManifestError, "cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifestError, std::string("manifest does not parse: ") + e.what());
  }
  DatasetHandle h;
  h.root = root;
  std::size_t index = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kManifestError, "record " + std::to_string(index) + ": " + what);
  };
  try {
    h.labels = manifest.at("labels").get<std::vector<std::string>>();
    for (const auto& r : manifest.at("samples")) {
      ManifestRecord rec;
      rec.id = r.at("id").get<std::string>();
      rec.image = r.at("image").get<std::string>();
      rec.depth = r.at("depth").get<std::string>();
      rec.masks = r.at("masks").get<std::map<std::string, std::string>>();
      rec.category = r.value("category", "");
      rec.clip_id = r.value("clip_id", "");
      h.records.push_back(std::move(rec));
      ++index;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed entry: ") + e.what());
  }
  if (h.labels.empty()) throw Error(ErrorCode::kManifestError, "manifest has an empty label list");

  for (index = 0; index < h.records.size(); ++index) {
    const auto& rec = h.records[index];
    auto header = [&](const std::string& rel, const char* what) {
      if (!fs::exists(root / rel)) fail(std::string("missing ") + what + " file " + rel);
      try {
        return read_pnm_header(root / rel);
      } catch (const Error& e) {
        fail(std::string("unreadable ") + what + " file " + rel + ": " + e.message());
      }
      return PnmHeader{};
    };
    const auto img = header(rec.image, "image");
    const auto dep = header(rec.depth, "depth");
    if (dep.width != img.width || dep.height != img.height) fail("depth size differs from image");
    for (const auto& [label, path] : rec.masks) {
      const auto m = header(path, "mask");
      if (m.width != img.width || m.height != img.height) fail("mask '" + label + "' size differs from image");
    }
  }
  return h;
}

AffordanceSample load_sample(const DatasetHandle& h, std::size_t index) {
  if (index >= h.records.size()) throw Error(ErrorCode::kInvalidArgument, "sample index out of range");
  const auto& rec = h.records[index];
  AffordanceSample s;
  s.image = read_ppm(h.root / rec.image);
  s.depth = read_depth_pgm(h.root / rec.depth);
  for (const auto& [label, path] : rec.masks) s.masks.emplace(label, read_mask_pgm(h.root / path));
  s.object_category = rec.category;
  s.source_clip = rec.clip_id;
  return s;
}

}  // namespace affkit
