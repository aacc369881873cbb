#include "affkit/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "affkit/error.hpp"

namespace affkit {

static_assert(std::endian::native == std::endian::little, "archive IO assumes a little-endian host");

namespace {

constexpr char kMagic[] = "AFKARCH1\n";
constexpr std::size_t kMagicSize = sizeof(kMagic) - 1;

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

}  // namespace

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, arr] : archive.arrays) {
    if (element_count(arr.shape) != static_cast<std::int64_t>(arr.data.size()))
      throw Error(ErrorCode::kShapeMismatch, "array '" + name + "' shape does not match its data");
    const std::uint64_t nbytes = arr.data.size() * sizeof(double);
    table.push_back({{"name", name}, {"shape", arr.shape}, {"dtype", "f64"}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }
  const nlohmann::json header = {{"metadata", archive.metadata}, {"arrays", table}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(kMagic, kMagicSize);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, arr] : archive.arrays)
    out.write(reinterpret_cast<const char*>(arr.data.data()), static_cast<std::streamsize>(arr.data.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  char magic[kMagicSize];
  in.read(magic, kMagicSize);
  if (!in || std::memcmp(magic, kMagic, kMagicSize) != 0)
    throw Error(ErrorCode::kFormatError, path.string() + " is not an affkit archive");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (std::uint64_t{1} << 32)) throw Error(ErrorCode::kFormatError, "bad archive header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(ErrorCode::kFormatError, "truncated archive header");
  const std::streamoff payload = in.tellg();

  Archive archive;
  try {
    const auto header = nlohmann::json::parse(text);
    archive.metadata = header.at("metadata");
    for (const auto& entry : header.at("arrays")) {
      if (entry.at("dtype").get<std::string>() != "f64") throw Error(ErrorCode::kFormatError, "unsupported dtype");
      ArchiveArray arr;
      arr.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
      const auto count = element_count(arr.shape);
      if (count < 0 || static_cast<std::uint64_t>(count) * sizeof(double) != nbytes)
        throw Error(ErrorCode::kFormatError, "array size disagrees with its shape");
      arr.data.resize(static_cast<std::size_t>(count));
      in.seekg(payload + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
      in.read(reinterpret_cast<char*>(arr.data.data()), static_cast<std::streamsize>(nbytes));
      if (!in) throw Error(ErrorCode::kFormatError, "truncated array payload");
      archive.arrays.emplace(entry.at("name").get<std::string>(), std::move(arr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("archive header: ") + e.what());
  }
  return archive;
}

}  // namespace affkit
