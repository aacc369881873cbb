#pragma once

// Synthetic corpus with planted ground truth.
//
// Mining scene: a hand-object clip (moving camera, a hand reaching for a
// two-part knife from below) and, for most scenes, a paired tool-object clip
// (the same knife carried blade first into a loaf). Colour markers on the table
// give the matcher something to track. Ground truth is kept in world
// coordinates together with per-frame camera offsets.
//
// Grasp scene: a 4 x 2 grid of 64 px cells rendered like the shapes dataset.
// One cell holds the target cake, one the knife, one or two hold spoons.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "affkit/geometry.hpp"
#include "affkit/image.hpp"
#include "affkit/mining.hpp"

namespace affkit::world {

using geometry::Box;
using geometry::Point2;

struct MiningTruth {
  std::string scene_id;
  std::vector<Point2> camera_offsets;  // hand clip, frame = world - offset
  Point2 grasp_world;                  // centroid of the planted contact region
  Box handle_world;
  Box blade_world;
  bool has_tool_clip = false;

  Point2 expected_grasp(int frame) const;
  Box blade_in_frame(int frame) const;
  Box handle_in_frame(int frame) const;
};
nlohmann::json truth_to_json(const MiningTruth& t);
MiningTruth truth_from_json(const nlohmann::json& j);

struct MiningScene {
  MiningTruth truth;
  mining::InteractionTimeline hand_clip;
  mining::InteractionTimeline tool_clip;  // empty clip_id when absent
};

// `tool_clip_fraction` of scenes carry a paired tool clip.
MiningScene make_mining_scene(const std::string& scene_id, std::uint64_t seed, double tool_clip_fraction = 0.8);

struct PlantedObject {
  Box box;  // 64 x 64 cell
  std::string category;
  bool target = false;
  Box grasp_part;     // empty box when absent
  Box function_part;  // blade for knives
};

struct GraspScene {
  std::string id;
  RgbImage image;
  DepthMap depth;
  std::string verb = "cut";
  std::string target = "cake";
  std::vector<PlantedObject> objects;
  int capable = -1;  // index of the knife
};

GraspScene make_grasp_scene(const std::string& scene_id, std::uint64_t seed);
void save_grasp_scene(const std::filesystem::path& dir, const GraspScene& scene);
GraspScene load_grasp_scene(const std::filesystem::path& dir);

struct CorpusOptions {
  int scenes = 50;
  std::uint64_t seed = 0;
  double tool_clip_fraction = 0.8;
};

// Layout: timelines/*.json (+ timelines/frames), truth/<scene>.json,
// scenes/<scene>/{image.ppm, depth.pgm, scene.json}, corpus.json.
void write_corpus(const std::filesystem::path& out, const CorpusOptions& options);

}  // namespace affkit::world
