#include "affkit/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "affkit/error.hpp"
#include "affkit/random.hpp"

namespace affkit::geometry {

namespace {

constexpr double kMinDeterminant = 1e-12;
constexpr double kCollinearTolerance = 1e-10;
constexpr double kRankTolerance = 1e-10;

double cross(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double squared_extent(std::span<const Point2> pts) {
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double e = std::max(x1 - x0, y1 - y0);
  return e * e;
}

bool has_collinear_triple(std::span<const Point2> pts) {
  const double scale = std::max(squared_extent(pts), 1e-300);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        if (std::abs(cross(pts[i], pts[j], pts[k])) <= kCollinearTolerance * scale) return true;
  return false;
}

bool all_collinear(std::span<const Point2> pts) {
  const Point2 c = mean_point(pts);
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) {
    Eigen::Vector2d d(p.x - c.x, p.y - c.y);
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const double hi = eig.eigenvalues()(1);
  return hi <= 0.0 || eig.eigenvalues()(0) <= kCollinearTolerance * hi;
}

// Similarity transform taking the points to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Point2> pts) {
  const Point2 c = mean_point(pts);
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - c.x, p.y - c.y);
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1;
  return t;
}

double transfer_error(const Homography& h, const Point2& src, const Point2& dst) {
  const Eigen::Matrix3d& m = h.matrix();
  const double w = m(2, 0) * src.x + m(2, 1) * src.y + m(2, 2);
  if (std::abs(w) < 1e-12) return std::numeric_limits<double>::infinity();
  const double x = (m(0, 0) * src.x + m(0, 1) * src.y + m(0, 2)) / w;
  const double y = (m(1, 0) * src.x + m(1, 1) * src.y + m(1, 2)) / w;
  return std::hypot(x - dst.x, y - dst.y);
}

std::vector<std::size_t> collect_inliers(const Homography& h, std::span<const Point2> src,
                                         std::span<const Point2> dst, double threshold) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < src.size(); ++i)
    if (transfer_error(h, src[i], dst[i]) < threshold) inliers.push_back(i);
  return inliers;
}

}  // namespace

Point2 mean_point(std::span<const Point2> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptySet, "mean of an empty point set");
  Point2 m;
  for (const auto& p : points) {
    m.x += p.x;
    m.y += p.y;
  }
  m.x /= static_cast<double>(points.size());
  m.y /= static_cast<double>(points.size());
  return m;
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// --- Homography -----------------------------------------------------------

Homography::Homography() : h_(Eigen::Matrix3d::Identity()) {}

Homography::Homography(const Eigen::Matrix3d& h) : h_(h) {
  if (!h_.allFinite()) throw Error(ErrorCode::kSingularSystem, "homography has non-finite entries");
  if (std::abs(h_(2, 2)) > std::numeric_limits<double>::min()) h_ /= h_(2, 2);
  if (!(std::abs(h_.determinant()) > kMinDeterminant)) {
    throw Error(ErrorCode::kSingularSystem, "homography is not invertible");
  }
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

// --- Box ------------------------------------------------------------------

Box::Box(double x0, double y0, double x1, double y1) : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
  if (!(x0 <= x1) || !(y0 <= y1)) throw Error(ErrorCode::kInvalidArgument, "box corners out of order");
}

// --- BinaryMask -----------------------------------------------------------

BinaryMask::BinaryMask(int width, int height, bool value)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            value ? 1 : 0) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidArgument, "negative mask size");
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 0 || height < 0 ||
      bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kShapeMismatch, "mask bit count does not match width*height");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PointSet BinaryMask::pixels() const {
  PointSet out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (get(x, y)) out.push_back({static_cast<double>(x), static_cast<double>(y)});
  return out;
}

Box BinaryMask::bounding_box() const {
  int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (get(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) throw Error(ErrorCode::kEmptyMask, "bounding box of an empty mask");
  return Box(x0, y0, x1 + 1, y1 + 1);
}

namespace {
void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::kShapeMismatch, "mask dimensions differ");
}
}  // namespace

BinaryMask BinaryMask::operator&(const BinaryMask& other) const {
  require_same_shape(*this, other);
  BinaryMask out(width_, height_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
  return out;
}

BinaryMask BinaryMask::operator|(const BinaryMask& other) const {
  require_same_shape(*this, other);
  BinaryMask out(width_, height_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | other.bits_[i];
  return out;
}

BinaryMask BinaryMask::minus(const BinaryMask& other) const {
  require_same_shape(*this, other);
  BinaryMask out(width_, height_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & (other.bits_[i] ^ 1);
  return out;
}

// --- Homography estimation ------------------------------------------------

Homography estimate_homography_dlt(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::kInvalidArgument, "source and destination sizes differ");
  }
  if (src.size() < 4) {
    throw Error(ErrorCode::kDegenerateConfiguration, "at least four correspondences are required");
  }
  if (src.size() == 4) {
    if (has_collinear_triple(src) || has_collinear_triple(dst)) {
      throw Error(ErrorCode::kDegenerateConfiguration, "collinear triple in a minimal sample");
    }
  } else if (all_collinear(src) || all_collinear(dst)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "points are collinear");
  }

  const Eigen::Matrix3d t_src = normalizing_transform(src);
  const Eigen::Matrix3d t_dst = normalizing_transform(dst);

  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d s = t_src * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d d = t_dst * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const double x = s(0), y = s(1), u = d(0), v = d(1);
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A valid system has rank 8; the 8th singular value must be well away from zero.
  if (sv.size() < 8 || !(sv(7) > kRankTolerance * sv(0))) {
    throw Error(ErrorCode::kSingularSystem, "design matrix is rank deficient");
  }
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  return Homography(t_dst.inverse() * hn * t_src);
}

RansacResult estimate_homography_ransac(std::span<const Point2> src, std::span<const Point2> dst,
                                        const RansacOptions& options) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::kInvalidArgument, "source and destination sizes differ");
  }
  if (src.size() < 4) {
    throw Error(ErrorCode::kDegenerateConfiguration, "at least four correspondences are required");
  }
  if (options.max_iters < 1 || !(options.threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC needs a positive threshold and iteration count");
  }

  Rng rng(options.seed);
  const std::size_t n = src.size();
  std::vector<std::size_t> best_inliers;
  Homography best_model;

  std::array<Point2, 4> s4, d4;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    std::array<std::size_t, 4> idx{};
    for (std::size_t k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = uniform_index(rng, n);
        fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx[k]) ==
                idx.begin() + static_cast<std::ptrdiff_t>(k);
      }
      s4[k] = src[idx[k]];
      d4[k] = dst[idx[k]];
    }
    Homography candidate;
    try {
      candidate = estimate_homography_dlt(s4, d4);
    } catch (const Error&) {
      continue;
    }
    auto inliers = collect_inliers(candidate, src, dst, options.threshold);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_model = candidate;
      if (best_inliers.size() == n) break;
    }
  }

  if (best_inliers.size() < 4) {
    throw Error(ErrorCode::kNoConsensus, "no model reached four inliers");
  }

  PointSet s_in, d_in;
  for (auto i : best_inliers) {
    s_in.push_back(src[i]);
    d_in.push_back(dst[i]);
  }
  try {
    Homography refit = estimate_homography_dlt(s_in, d_in);
    auto refit_inliers = collect_inliers(refit, src, dst, options.threshold);
    if (refit_inliers.size() >= 4) return {refit, std::move(refit_inliers)};
  } catch (const Error&) {
    // Fall back to the minimal-sample model.
  }
  return {best_model, std::move(best_inliers)};
}

Point2 project_point(const Homography& h, const Point2& p) {
  const Eigen::Matrix3d& m = h.matrix();
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (w < 1e-12) throw Error(ErrorCode::kPointAtInfinity, "projected point lies at infinity");
  return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w, (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

// --- Sampling and distances -------------------------------------------------

Point2 farthest_point(std::span<const Point2> reference, std::span<const Point2> candidates) {
  if (reference.empty() || candidates.empty()) {
    throw Error(ErrorCode::kEmptySet, "farthest_point needs non-empty sets");
  }
  double best = -1.0;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& r : reference) {
      const double dx = candidates[i].x - r.x, dy = candidates[i].y - r.y;
      nearest = std::min(nearest, dx * dx + dy * dy);
    }
    if (nearest > best) {
      best = nearest;
      best_idx = i;
    }
  }
  return candidates[best_idx];
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = a.area(), area_b = b.area();
  const double uni = (std::min(area_a, area_b) + std::max(area_a, area_b)) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BinaryMask erode_mask(const BinaryMask& mask, int radius) {
  if (radius < 0) throw Error(ErrorCode::kInvalidArgument, "erosion radius must be non-negative");
  if (radius == 0) return mask;
  const int w = mask.width(), h = mask.height();
  const int window = 2 * radius + 1;

  // Rows first, then columns: the square element is separable.
  BinaryMask rows(w, h);
  std::vector<int> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.get(x, y) ? 1 : 0);
    for (int x = radius; x + radius < w; ++x)
      if (prefix[x + radius + 1] - prefix[x - radius] == window) rows.set(x, y);
  }
  BinaryMask out(w, h);
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + (rows.get(x, y) ? 1 : 0);
    for (int y = radius; y + radius < h; ++y)
      if (prefix[y + radius + 1] - prefix[y - radius] == window) out.set(x, y);
  }
  return out;
}

Point2 nearest_point_between_masks(const BinaryMask& source, const BinaryMask& target) {
  if (source.width() != target.width() || source.height() != target.height()) {
    throw Error(ErrorCode::kShapeMismatch, "mask dimensions differ");
  }
  if (source.empty() || target.empty()) throw Error(ErrorCode::kEmptyMask, "nearest point needs non-empty masks");

  // Exact squared Euclidean distance transform of the target (column pass
  // followed by a lower envelope of parabolas per row).
  const int w = target.width(), h = target.height();
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> col(static_cast<std::size_t>(w) * h, kInf);
  for (int x = 0; x < w; ++x) {
    long long last = -1;
    for (int y = 0; y < h; ++y) {
      if (target.get(x, y)) last = y;
      if (last >= 0) col[static_cast<std::size_t>(y) * w + x] = y - last;
    }
    last = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (target.get(x, y)) last = y;
      if (last >= 0) {
        auto& c = col[static_cast<std::size_t>(y) * w + x];
        c = std::min(c, last - y);
      }
    }
  }

  long long best = kInf;
  Point2 best_point;
  std::vector<int> sites;      // parabola apexes in the lower envelope
  std::vector<double> starts;  // left boundary of each envelope segment
  for (int y = 0; y < h; ++y) {
    const long long* g = &col[static_cast<std::size_t>(y) * w];
    auto f = [&](int x) { return g[x] * g[x] + static_cast<long long>(x) * x; };
    sites.clear();
    starts.clear();
    for (int x = 0; x < w; ++x) {
      if (g[x] == kInf) continue;
      double cut = -std::numeric_limits<double>::infinity();
      while (!sites.empty()) {
        const int s = sites.back();
        cut = static_cast<double>(f(x) - f(s)) / (2.0 * (x - s));
        if (cut > starts.back()) break;
        sites.pop_back();
        starts.pop_back();
        cut = -std::numeric_limits<double>::infinity();
      }
      sites.push_back(x);
      starts.push_back(cut);
    }
    if (sites.empty()) continue;
    std::size_t k = 0;
    for (int x = 0; x < w; ++x) {
      while (k + 1 < starts.size() && starts[k + 1] < x) ++k;
      if (!source.get(x, y)) continue;
      const long long dx = x - sites[k];
      const long long d2 = dx * dx + g[sites[k]] * g[sites[k]];
      if (d2 < best) {
        best = d2;
        best_point = {static_cast<double>(x), static_cast<double>(y)};
      }
    }
  }
  return best_point;
}

PointSet sample_intersection_points(const BinaryMask& region, const Box& box, std::size_t n,
                                    std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample count must be at least one");
  PointSet candidates;
  const int y0 = std::max(0, static_cast<int>(std::ceil(box.y_min)));
  const int y1 = std::min(region.height(), static_cast<int>(std::ceil(box.y_max)));
  const int x0 = std::max(0, static_cast<int>(std::ceil(box.x_min)));
  const int x1 = std::min(region.width(), static_cast<int>(std::ceil(box.x_max)));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (region.get(x, y) && box.covers_pixel(x, y))
        candidates.push_back({static_cast<double>(x), static_cast<double>(y)});
  if (candidates.empty()) throw Error(ErrorCode::kEmptyIntersection, "mask and box do not intersect");

  Rng rng(seed);
  PointSet out;
  out.reserve(n);
  if (candidates.size() < n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(candidates[uniform_index(rng, candidates.size())]);
    return out;
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, order.size() - i);
    std::swap(order[i], order[j]);
    out.push_back(candidates[order[i]]);
  }
  return out;
}

}  // namespace affkit::geometry
