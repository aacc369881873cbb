#pragma once

// Planar projective geometry, point sampling and mask/box arithmetic.
//
// Pixel convention: the pixel in column c and row r is the point (x=c, y=r).
// A Box covers the pixels with x_min <= c < x_max and y_min <= r < y_max;
// continuous containment (Box::contains) is closed on all sides.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace affkit::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using PointSet = std::vector<Point2>;

Point2 mean_point(std::span<const Point2> points);
double distance(const Point2& a, const Point2& b);

// 3x3 projective transform. Construction enforces |det| > 1e-12 and scales the
// matrix so that h(2,2) == 1 whenever h(2,2) is non-zero.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const Eigen::Matrix3d& h);

  static Homography identity() { return Homography(); }
  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& matrix() const { return h_; }
  double operator()(int row, int col) const { return h_(row, col); }
  Homography inverse() const;

 private:
  Eigen::Matrix3d h_;
};

struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  Box() = default;
  Box(double x0, double y0, double x1, double y1);

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool contains(const Point2& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  bool covers_pixel(int col, int row) const {
    return col >= x_min && col < x_max && row >= y_min && row < y_max;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  // Set pixels in row-major order.
  PointSet pixels() const;
  // Smallest box covering every set pixel; requires a non-empty mask.
  Box bounding_box() const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  BinaryMask operator&(const BinaryMask& other) const;
  BinaryMask operator|(const BinaryMask& other) const;
  BinaryMask minus(const BinaryMask& other) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Direct linear transform with Hartley normalization. Four-point inputs must
// not contain a collinear triple; larger inputs must not be rank deficient.
Homography estimate_homography_dlt(std::span<const Point2> src, std::span<const Point2> dst);

struct RansacOptions {
  double threshold = 3.0;  // pixels, forward transfer error
  int max_iters = 2000;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography model;
  std::vector<std::size_t> inliers;  // ascending
};

RansacResult estimate_homography_ransac(std::span<const Point2> src, std::span<const Point2> dst,
                                        const RansacOptions& options = {});

Point2 project_point(const Homography& h, const Point2& p);

// Candidate maximizing the minimum distance to the reference set. Ties go to
// the lowest candidate index.
Point2 farthest_point(std::span<const Point2> reference, std::span<const Point2> candidates);

double box_iou(const Box& a, const Box& b);

// Square (Chebyshev) structuring element; pixels outside the image count as
// unset.
BinaryMask erode_mask(const BinaryMask& mask, int radius);

// Source pixel with the smallest distance to any target pixel, ties broken by
// lowest row-major index.
Point2 nearest_point_between_masks(const BinaryMask& source, const BinaryMask& target);

PointSet sample_intersection_points(const BinaryMask& region, const Box& box, std::size_t n,
                                    std::uint64_t seed);

}  // namespace affkit::geometry
