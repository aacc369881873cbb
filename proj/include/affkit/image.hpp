#pragma once

// Raster containers and netpbm IO. RGB frames are 8-bit; depth maps are
// single-channel doubles in [0,1] and are stored on disk as 8-bit PGM.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "affkit/geometry.hpp"

namespace affkit {

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  std::uint8_t at(int x, int y, int c) const { return data_[offset(x, y) + c]; }
  std::uint8_t& at(int x, int y, int c) { return data_[offset(x, y) + c]; }
  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const auto o = offset(x, y);
    return {data_[o], data_[o + 1], data_[o + 2]};
  }
  void set_pixel(int x, int y, std::array<std::uint8_t, 3> rgb) {
    const auto o = offset(x, y);
    data_[o] = rgb[0];
    data_[o + 1] = rgb[1];
    data_[o + 2] = rgb[2];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  double at(int x, int y) const { return data_[index(x, y)]; }
  double& at(int x, int y) { return data_[index(x, y)]; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Integer pixel window covering `box`, clipped to a width x height raster.
struct PixelWindow {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};
PixelWindow pixel_window(const geometry::Box& box, int width, int height);

RgbImage crop(const RgbImage& image, const PixelWindow& window);
DepthMap crop(const DepthMap& depth, const PixelWindow& window);
geometry::BinaryMask crop(const geometry::BinaryMask& mask, const PixelWindow& window);

RgbImage resize_bilinear(const RgbImage& image, int width, int height);
DepthMap resize_bilinear(const DepthMap& depth, int width, int height);
geometry::BinaryMask resize_nearest(const geometry::BinaryMask& mask, int width, int height);

RgbImage flip_horizontal(const RgbImage& image);
RgbImage flip_vertical(const RgbImage& image);
DepthMap flip_horizontal(const DepthMap& depth);
DepthMap flip_vertical(const DepthMap& depth);
geometry::BinaryMask flip_horizontal(const geometry::BinaryMask& mask);
geometry::BinaryMask flip_vertical(const geometry::BinaryMask& mask);

// Blend `color` over the mask pixels with the given opacity.
void paint_overlay(RgbImage& image, const geometry::BinaryMask& mask, std::array<std::uint8_t, 3> color,
                   double opacity);

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
// Depth is quantized to 8 bits (round(255 * d)).
void write_pgm(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth_pgm(const std::filesystem::path& path);
// Masks use 0/255 semantics; any non-zero byte reads back as set.
void write_mask_pgm(const std::filesystem::path& path, const geometry::BinaryMask& mask);
geometry::BinaryMask read_mask_pgm(const std::filesystem::path& path);

struct PnmHeader {
  int width = 0;
  int height = 0;
  int channels = 0;
};
PnmHeader read_pnm_header(const std::filesystem::path& path);

}  // namespace affkit
