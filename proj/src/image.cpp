#include "affkit/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "affkit/error.hpp"

namespace affkit {

using geometry::BinaryMask;
using geometry::Box;

RgbImage::RgbImage(int width, int height, std::array<std::uint8_t, 3> fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidArgument, "negative image size");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

DepthMap::DepthMap(int width, int height, double fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidArgument, "negative depth size");
}

PixelWindow pixel_window(const Box& box, int width, int height) {
  PixelWindow w;
  w.x0 = std::clamp(static_cast<int>(std::floor(box.x_min)), 0, width);
  w.y0 = std::clamp(static_cast<int>(std::floor(box.y_min)), 0, height);
  w.x1 = std::clamp(static_cast<int>(std::ceil(box.x_max)), w.x0, width);
  w.y1 = std::clamp(static_cast<int>(std::ceil(box.y_max)), w.y0, height);
  return w;
}

RgbImage crop(const RgbImage& image, const PixelWindow& window) {
  RgbImage out(window.width(), window.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.set_pixel(x, y, image.pixel(x + window.x0, y + window.y0));
  return out;
}

DepthMap crop(const DepthMap& depth, const PixelWindow& window) {
  DepthMap out(window.width(), window.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = depth.at(x + window.x0, y + window.y0);
  return out;
}

BinaryMask crop(const BinaryMask& mask, const PixelWindow& window) {
  BinaryMask out(window.width(), window.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.set(x, y, mask.get(x + window.x0, y + window.y0));
  return out;
}

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

// Half-pixel-centre sampling positions (corners not aligned).
std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    taps[i] = {i0, i1, s - i0};
  }
  return taps;
}

int nearest_index(int i, int src, int dst) {
  return std::min(src - 1, static_cast<int>(std::floor((i + 0.5) * src / static_cast<double>(dst))));
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "resize of an empty image");
  const auto tx = bilinear_taps(image.width(), width);
  const auto ty = bilinear_taps(image.height(), height);
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        const auto& a = tx[x];
        const auto& b = ty[y];
        const double top = (1 - a.w1) * image.at(a.i0, b.i0, c) + a.w1 * image.at(a.i1, b.i0, c);
        const double bot = (1 - a.w1) * image.at(a.i0, b.i1, c) + a.w1 * image.at(a.i1, b.i1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround((1 - b.w1) * top + b.w1 * bot), 0L, 255L));
      }
  return out;
}

DepthMap resize_bilinear(const DepthMap& depth, int width, int height) {
  if (depth.empty()) throw Error(ErrorCode::kInvalidArgument, "resize of an empty depth map");
  const auto tx = bilinear_taps(depth.width(), width);
  const auto ty = bilinear_taps(depth.height(), height);
  DepthMap out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto& a = tx[x];
      const auto& b = ty[y];
      const double top = (1 - a.w1) * depth.at(a.i0, b.i0) + a.w1 * depth.at(a.i1, b.i0);
      const double bot = (1 - a.w1) * depth.at(a.i0, b.i1) + a.w1 * depth.at(a.i1, b.i1);
      out.at(x, y) = (1 - b.w1) * top + b.w1 * bot;
    }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  BinaryMask out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = nearest_index(y, mask.height(), height);
    for (int x = 0; x < width; ++x) out.set(x, y, mask.get(nearest_index(x, mask.width(), width), sy));
  }
  return out;
}

RgbImage flip_horizontal(const RgbImage& image) {
  RgbImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) out.set_pixel(image.width() - 1 - x, y, image.pixel(x, y));
  return out;
}

RgbImage flip_vertical(const RgbImage& image) {
  RgbImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) out.set_pixel(x, image.height() - 1 - y, image.pixel(x, y));
  return out;
}

DepthMap flip_horizontal(const DepthMap& depth) {
  DepthMap out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) out.at(depth.width() - 1 - x, y) = depth.at(x, y);
  return out;
}

DepthMap flip_vertical(const DepthMap& depth) {
  DepthMap out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) out.at(x, depth.height() - 1 - y) = depth.at(x, y);
  return out;
}

BinaryMask flip_horizontal(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) out.set(mask.width() - 1 - x, y, mask.get(x, y));
  return out;
}

BinaryMask flip_vertical(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) out.set(x, mask.height() - 1 - y, mask.get(x, y));
  return out;
}

void paint_overlay(RgbImage& image, const BinaryMask& mask, std::array<std::uint8_t, 3> color, double opacity) {
  if (mask.width() != image.width() || mask.height() != image.height())
    throw Error(ErrorCode::kShapeMismatch, "overlay mask does not match image");
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (!mask.get(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - opacity) * image.at(x, y, c) + opacity * color[c];
        image.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
}

// --- netpbm -----------------------------------------------------------------

namespace {

void write_pnm(const std::filesystem::path& path, const char* magic, int width, int height,
               const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << magic << "\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

struct PnmData {
  PnmHeader header;
  std::vector<std::uint8_t> bytes;
};

PnmData read_pnm(const std::filesystem::path& path, bool with_data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const std::string magic = next_token(in);
  PnmData d;
  if (magic == "P6") d.header.channels = 3;
  else if (magic == "P5") d.header.channels = 1;
  else throw Error(ErrorCode::kFormatError, path.string() + " is not a binary PPM/PGM file");
  try {
    d.header.width = std::stoi(next_token(in));
    d.header.height = std::stoi(next_token(in));
    if (std::stoi(next_token(in)) != 255) throw Error(ErrorCode::kFormatError, "only 8-bit netpbm is supported");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kFormatError, "malformed netpbm header in " + path.string());
  }
  if (d.header.width <= 0 || d.header.height <= 0)
    throw Error(ErrorCode::kFormatError, "bad netpbm dimensions in " + path.string());
  if (with_data) {
    d.bytes.resize(static_cast<std::size_t>(d.header.width) * d.header.height * d.header.channels);
    in.read(reinterpret_cast<char*>(d.bytes.data()), static_cast<std::streamsize>(d.bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(d.bytes.size()))
      throw Error(ErrorCode::kFormatError, "truncated pixel data in " + path.string());
  }
  return d;
}

}  // namespace

PnmHeader read_pnm_header(const std::filesystem::path& path) { return read_pnm(path, false).header; }

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  write_pnm(path, "P6", image.width(), image.height(), image.data());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  const auto d = read_pnm(path, true);
  if (d.header.channels != 3) throw Error(ErrorCode::kFormatError, path.string() + " is not an RGB image");
  RgbImage img(d.header.width, d.header.height);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * img.width() + x) * 3;
      img.set_pixel(x, y, {d.bytes[o], d.bytes[o + 1], d.bytes[o + 2]});
    }
  return img;
}

void write_pgm(const std::filesystem::path& path, const DepthMap& depth) {
  std::vector<std::uint8_t> bytes(depth.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * depth.data()[i]), 0L, 255L));
  write_pnm(path, "P5", depth.width(), depth.height(), bytes);
}

DepthMap read_depth_pgm(const std::filesystem::path& path) {
  const auto d = read_pnm(path, true);
  if (d.header.channels != 1) throw Error(ErrorCode::kFormatError, path.string() + " is not a grayscale image");
  DepthMap depth(d.header.width, d.header.height);
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      depth.at(x, y) = d.bytes[static_cast<std::size_t>(y) * depth.width() + x] / 255.0;
  return depth;
}

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.bits().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.bits()[i] ? 255 : 0;
  write_pnm(path, "P5", mask.width(), mask.height(), bytes);
}

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
  auto d = read_pnm(path, true);
  if (d.header.channels != 1) throw Error(ErrorCode::kFormatError, path.string() + " is not a grayscale mask");
  return BinaryMask(d.header.width, d.header.height, std::move(d.bytes));
}

}  // namespace affkit
