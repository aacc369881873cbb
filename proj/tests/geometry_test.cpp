#include "affkit/geometry.hpp"

#include <numeric>

#include <gtest/gtest.h>

#include "affkit/error.hpp"
#include "oracles.hpp"

namespace affkit::geometry {
namespace {

using testing::apply;

PointSet unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

double max_reprojection(const Homography& h, const PointSet& src, const PointSet& dst) {
  double err = 0;
  for (std::size_t i = 0; i < src.size(); ++i) err = std::max(err, distance(project_point(h, src[i]), dst[i]));
  return err;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an affkit::Error";
  return ErrorCode::kInvalidArgument;
}

TEST(DltTest, IdentityFromUnitSquare) {
  const auto sq = unit_square();
  const Homography h = estimate_homography_dlt(sq, sq);
  EXPECT_TRUE(h.matrix().isApprox(Eigen::Matrix3d::Identity(), 1e-12));
  EXPECT_DOUBLE_EQ(h(2, 2), 1.0);
}

TEST(DltTest, PureTranslation) {
  const auto sq = unit_square();
  PointSet shifted;
  for (const auto& p : sq) shifted.push_back({p.x + 5, p.y + 3});
  const Homography h = estimate_homography_dlt(sq, shifted);
  EXPECT_NEAR(h(0, 2), 5.0, 1e-9);
  EXPECT_NEAR(h(1, 2), 3.0, 1e-9);
  EXPECT_LE(max_reprojection(h, sq, shifted), 1e-6);
}

TEST(DltTest, ThreePointsAreDegenerate) {
  const PointSet three{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_EQ(code_of([&] { estimate_homography_dlt(three, three); }), ErrorCode::kDegenerateConfiguration);
}

TEST(DltTest, CollinearTripleIsDegenerate) {
  const PointSet pts{{0, 0}, {1, 1}, {2, 2}, {0, 5}};
  EXPECT_EQ(code_of([&] { estimate_homography_dlt(pts, pts); }), ErrorCode::kDegenerateConfiguration);
}

TEST(DltTest, RoundTripOnRandomHomographies) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Matrix3d truth = testing::random_homography(rng);
    const auto src = testing::random_points(rng, 4 + trial % 20, 0, 200);
    PointSet dst;
    for (const auto& p : src) dst.push_back(apply(truth, p));
    const Homography h = estimate_homography_dlt(src, dst);
    EXPECT_LE(max_reprojection(h, src, dst), 1e-6) << "trial " << trial;
  }
}

TEST(HomographyTest, SingularMatrixRejected) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.row(2).setZero();
  EXPECT_EQ(code_of([&] { Homography h(m); }), ErrorCode::kSingularSystem);
}

TEST(ProjectTest, IdentityAndTranslation) {
  EXPECT_EQ(project_point(Homography::identity(), {7, 11}), (Point2{7, 11}));
  EXPECT_EQ(project_point(Homography::translation(5, 3), {0, 0}), (Point2{5, 3}));
}

TEST(ProjectTest, PointAtInfinity) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = -1.0;  // w = 1 - x
  const Homography h(m);
  EXPECT_EQ(code_of([&] { project_point(h, {1.0, 0.0}); }), ErrorCode::kPointAtInfinity);
}

TEST(ProjectTest, InverseRoundTrip) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const Homography h(testing::random_homography(rng));
    const Point2 p{uniform(rng, 0, 200), uniform(rng, 0, 200)};
    const Point2 back = project_point(h.inverse(), project_point(h, p));
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
  }
}

TEST(RansacTest, ExactCorrespondencesAllInliers) {
  Rng rng(3);
  const Eigen::Matrix3d truth = testing::random_homography(rng);
  const auto src = testing::random_points(rng, 20, 0, 200);
  PointSet dst;
  for (const auto& p : src) dst.push_back(apply(truth, p));
  const auto result = estimate_homography_ransac(src, dst, {.threshold = 2.0, .max_iters = 500, .seed = 1});
  EXPECT_EQ(result.inliers.size(), 20u);
  EXPECT_LE(max_reprojection(result.model, src, dst), 1e-6);
}

TEST(RansacTest, PlantedOutliersAreRejected) {
  Rng rng(21);
  const Eigen::Matrix3d truth = testing::random_homography(rng);
  const auto src = testing::random_points(rng, 20, 0, 200);
  PointSet dst;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (i < 14) {
      dst.push_back(apply(truth, src[i]));
    } else {
      Point2 q{uniform(rng, 0, 200), uniform(rng, 0, 200)};
      ASSERT_GT(distance(q, apply(truth, src[i])), 2.0);
      dst.push_back(q);
    }
  }
  const auto result = estimate_homography_ransac(src, dst, {.threshold = 2.0, .max_iters = 1000, .seed = 9});
  std::vector<std::size_t> expected(14);
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  EXPECT_EQ(result.inliers, expected);
}

TEST(RansacTest, NoConsensusWithoutNonDegenerateModel) {
  // Three destination points are collinear, so the only exact 4-point fit
  // would be singular.
  const PointSet src = unit_square();
  const PointSet dst{{0, 0}, {10, 0}, {20, 0}, {3, 40}};
  EXPECT_EQ(code_of([&] { estimate_homography_ransac(src, dst, {.threshold = 2.0, .max_iters = 100}); }),
            ErrorCode::kNoConsensus);
}

TEST(RansacTest, DeterministicGivenSeed) {
  Rng rng(4);
  const auto src = testing::random_points(rng, 30, 0, 100);
  const auto dst = testing::random_points(rng, 30, 0, 100);
  RansacOptions opt{.threshold = 15.0, .max_iters = 200, .seed = 77};
  try {
    const auto a = estimate_homography_ransac(src, dst, opt);
    const auto b = estimate_homography_ransac(src, dst, opt);
    EXPECT_EQ(a.inliers, b.inliers);
    EXPECT_EQ(a.model.matrix(), b.model.matrix());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoConsensus);
  }
}

TEST(RansacTest, TooFewCorrespondences) {
  const PointSet three{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_EQ(code_of([&] { estimate_homography_ransac(three, three); }), ErrorCode::kDegenerateConfiguration);
}

TEST(FarthestPointTest, Examples) {
  EXPECT_EQ(farthest_point(PointSet{{0, 0}}, PointSet{{1, 0}, {10, 0}, {5, 5}}), (Point2{10, 0}));
  EXPECT_EQ(farthest_point(PointSet{{3, 3}}, PointSet{{1, 2}}), (Point2{1, 2}));
  EXPECT_EQ(farthest_point(PointSet{{0, 0}, {10, 0}}, PointSet{{5, 0}, {5, 10}}), (Point2{5, 10}));
}

TEST(FarthestPointTest, TieKeepsLowestIndex) {
  EXPECT_EQ(farthest_point(PointSet{{0, 0}}, PointSet{{0, 5}, {5, 0}, {3, 4}}), (Point2{0, 5}));
}

TEST(FarthestPointTest, EmptySets) {
  EXPECT_EQ(code_of([] { farthest_point(PointSet{}, PointSet{{1, 1}}); }), ErrorCode::kEmptySet);
  EXPECT_EQ(code_of([] { farthest_point(PointSet{{1, 1}}, PointSet{}); }), ErrorCode::kEmptySet);
}

TEST(FarthestPointTest, MatchesBruteForce) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    PointSet ref, cand;
    for (std::size_t i = 0, n = 1 + uniform_index(rng, 5); i < n; ++i)
      ref.push_back({double(uniform_index(rng, 64)), double(uniform_index(rng, 64))});
    for (std::size_t i = 0, n = 1 + uniform_index(rng, 80); i < n; ++i)
      cand.push_back({double(uniform_index(rng, 64)), double(uniform_index(rng, 64))});
    EXPECT_EQ(farthest_point(ref, cand), testing::brute_farthest(ref, cand));
  }
}

TEST(BoxIouTest, Examples) {
  const Box a(0, 0, 10, 10);
  EXPECT_DOUBLE_EQ(box_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(box_iou(a, Box(20, 20, 30, 30)), 0.0);
  EXPECT_NEAR(box_iou(a, Box(5, 0, 15, 10)), 50.0 / 150.0, 1e-15);
  EXPECT_DOUBLE_EQ(box_iou(Box(1, 1, 1, 1), Box(1, 1, 1, 1)), 0.0);
}

TEST(BoxIouTest, SymmetricAndBounded) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    auto rb = [&] {
      const double x = uniform(rng, 0, 50), y = uniform(rng, 0, 50);
      return Box(x, y, x + uniform(rng, 0, 30), y + uniform(rng, 0, 30));
    };
    const Box a = rb(), b = rb();
    const double ab = box_iou(a, b);
    EXPECT_EQ(ab, box_iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(BoxTest, InvalidCornersRejected) {
  EXPECT_EQ(code_of([] { Box b(5, 0, 1, 1); }), ErrorCode::kInvalidArgument);
}

TEST(ErodeTest, Examples) {
  Rng rng(1);
  const auto m = testing::random_mask(rng, 12, 9, 0.5);
  EXPECT_EQ(erode_mask(m, 0), m);

  const BinaryMask full(10, 10, true);
  const auto eroded = erode_mask(full, 1);
  EXPECT_EQ(eroded.count(), 64u);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) EXPECT_EQ(eroded.get(x, y), x >= 1 && x <= 8 && y >= 1 && y <= 8);

  BinaryMask single(5, 5);
  single.set(2, 2);
  EXPECT_TRUE(erode_mask(single, 1).empty());
}

TEST(ErodeTest, RadiiCompose) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testing::random_mask(rng, 24, 20, 0.85);
    const int r1 = static_cast<int>(uniform_index(rng, 3)), r2 = static_cast<int>(uniform_index(rng, 3));
    EXPECT_EQ(erode_mask(m, r1 + r2), erode_mask(erode_mask(m, r1), r2));
  }
}

TEST(ErodeTest, MatchesDefinition) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = testing::random_mask(rng, 16, 16, 0.8);
    const int r = 1 + static_cast<int>(uniform_index(rng, 2));
    const auto e = erode_mask(m, r);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        bool all = true;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) all = all && m.in_bounds(x + dx, y + dy) && m.get(x + dx, y + dy);
        EXPECT_EQ(e.get(x, y), all);
      }
  }
}

TEST(NearestPointTest, TouchingSquares) {
  BinaryMask src(20, 10), dst(20, 10);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) src.set(x, y);
  for (int y = 0; y < 5; ++y)
    for (int x = 4; x < 9; ++x) dst.set(x, y);
  const Point2 p = nearest_point_between_masks(src, dst);
  EXPECT_TRUE(dst.get(static_cast<int>(p.x), static_cast<int>(p.y)));
  EXPECT_TRUE(src.get(static_cast<int>(p.x), static_cast<int>(p.y)));
}

TEST(NearestPointTest, SeparatedSquares) {
  BinaryMask src(20, 10), dst(20, 10);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) src.set(x, y);
  for (int y = 0; y < 5; ++y)
    for (int x = 10; x < 15; ++x) dst.set(x, y);
  EXPECT_EQ(nearest_point_between_masks(src, dst), (Point2{4, 0}));
}

TEST(NearestPointTest, EmptyMasks) {
  BinaryMask empty(4, 4), some(4, 4);
  some.set(1, 1);
  EXPECT_EQ(code_of([&] { nearest_point_between_masks(empty, some); }), ErrorCode::kEmptyMask);
  EXPECT_EQ(code_of([&] { nearest_point_between_masks(some, empty); }), ErrorCode::kEmptyMask);
}

TEST(NearestPointTest, MatchesBruteForce) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(uniform_index(rng, 64));
    const int h = 1 + static_cast<int>(uniform_index(rng, 64));
    auto a = testing::random_mask(rng, w, h, uniform(rng, 0.01, 0.3));
    auto b = testing::random_mask(rng, w, h, uniform(rng, 0.01, 0.3));
    if (a.empty()) a.set(0, 0);
    if (b.empty()) b.set(w - 1, h - 1);
    EXPECT_EQ(nearest_point_between_masks(a, b), testing::brute_nearest(a, b)) << "trial " << trial;
  }
}

TEST(SampleIntersectionTest, SinglePixelRegion) {
  const BinaryMask full(10, 10, true);
  const auto pts = sample_intersection_points(full, Box(3, 4, 4, 5), 3, 1);
  ASSERT_EQ(pts.size(), 3u);
  for (const auto& p : pts) EXPECT_EQ(p, (Point2{3, 4}));
}

TEST(SampleIntersectionTest, DisjointIsError) {
  BinaryMask m(10, 10);
  m.set(0, 0);
  EXPECT_EQ(code_of([&] { sample_intersection_points(m, Box(5, 5, 9, 9), 2, 0); }),
            ErrorCode::kEmptyIntersection);
}

TEST(SampleIntersectionTest, MembershipAndDeterminism) {
  BinaryMask m(30, 30);
  for (int y = 5; y < 20; ++y)
    for (int x = 5; x < 20; ++x) m.set(x, y);
  const Box box(10, 10, 20, 20);  // 10x10 = 100 intersection pixels
  const auto a = sample_intersection_points(m, box, 8, 42);
  const auto b = sample_intersection_points(m, box, 8, 42);
  ASSERT_EQ(a.size(), 8u);
  EXPECT_EQ(a, b);
  for (const auto& p : a) {
    EXPECT_TRUE(m.get(static_cast<int>(p.x), static_cast<int>(p.y)));
    EXPECT_TRUE(box.covers_pixel(static_cast<int>(p.x), static_cast<int>(p.y)));
  }
  // Without replacement when the region is large enough.
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) EXPECT_NE(a[i], a[j]);
}

}  // namespace
}  // namespace affkit::geometry
