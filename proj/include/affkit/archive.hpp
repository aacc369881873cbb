#pragma once

// Named-array archive used for checkpoints and external embeddings.
//
// Layout:
//   bytes 0..8   magic "AFKARCH1\n"
//   next 8       header length H, uint64 little-endian
//   next H       UTF-8 JSON header:
//                {"metadata": {...},
//                 "arrays": [{"name", "shape": [..], "dtype": "f64",
//                             "offset", "nbytes"}, ...]}
//   remainder    array payloads, little-endian IEEE-754 doubles, row-major;
//                offsets are relative to the start of the payload section.
// Arrays are written in name order so identical content gives identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace affkit {

struct ArchiveArray {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  friend bool operator==(const ArchiveArray&, const ArchiveArray&) = default;
};

struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, ArchiveArray> arrays;

  friend bool operator==(const Archive&, const Archive&) = default;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

}  // namespace affkit
