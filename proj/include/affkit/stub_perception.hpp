#pragma once

// Deterministic stand-ins for the perception models, driven by the shared
// colour palette of the synthetic world.
//
//   detect_hand_object   skin pixels give the hand box; tool-part pixels give
//                        the object box, or the tool box when food is visible
//                        (food is then the object). Contact means the hand and
//                        object boxes overlap, or the tool and food boxes do.
//   segment_points       4-connected flood fill of each positive point's
//                        colour class. Negative points are ignored, so a
//                        positive and a negative inside one uniform region
//                        yield that whole region.
//   detect_open_vocabulary
//                        connected tool-part or food components of at least
//                        16 px, named knife/spoon/utensil/bread/cake.
//   map_correspondence   normalized box-coordinate transfer.
//   estimate_depth       fixed depth per colour class.
//   match                marker centroids matched by id; every fourth marker
//                        is deliberately paired with the next one to give
//                        RANSAC outliers to reject.

#include "affkit/mining.hpp"

namespace affkit::mining {

class StubPerception : public PerceptionClients {
 public:
  ContactState detect_hand_object(const RgbImage& frame) const override;
  BinaryMask segment_points(const RgbImage& frame, const PointSet& positive, const PointSet& negative) const override;
  std::vector<Detection> detect_open_vocabulary(const RgbImage& frame,
                                                const std::vector<std::string>& vocabulary) const override;
  Point2 map_correspondence(const RgbImage& frame_a, const Box& box_a, const Point2& point_a, const RgbImage& frame_b,
                            const Box& box_b) const override;
  DepthMap estimate_depth(const RgbImage& frame) const override;
  std::pair<PointSet, PointSet> match(const RgbImage& frame_a, const RgbImage& frame_b) const override;
};

}  // namespace affkit::mining
