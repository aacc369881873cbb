#pragma once

// Task-driven object selection and grasp filtering.
//
// A scene is parsed into object boxes, every non-target object is segmented
// by the affordance model, the object with the largest confident area for the
// task verb is selected, and grasp proposals are kept only where they touch
// the graspable region (use_tool) or the functional region (handover).

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "affkit/geometry.hpp"
#include "affkit/image.hpp"
#include "affkit/metrics.hpp"
#include "affkit/mining.hpp"
#include "affkit/model.hpp"

namespace affkit::graspsel {

using geometry::BinaryMask;
using geometry::Box;
using geometry::Point2;
using mining::Detection;

enum class TaskMode { kUseTool, kHandover };
const char* to_string(TaskMode mode);

struct TaskSpec {
  std::string verb;
  std::string target;
  TaskMode mode = TaskMode::kUseTool;
};
// "<verb> <target>", e.g. "cut cake".
TaskSpec parse_task(const std::string& text, TaskMode mode = TaskMode::kUseTool);

struct SceneObject {
  Box box;
  std::string category_hint;
  bool is_target = false;
  RgbImage crop;
  DepthMap depth_crop;
  PixelWindow window;   // crop placement in the scene
  ad::Matrix scores;    // (crop pixels) x L, filled by segment_objects
  LabelMap labels;      // crop-sized, filled by segment_objects
};

struct GraspProposal {
  std::array<double, 3> translation{};       // metres
  std::array<double, 4> rotation{1, 0, 0, 0};  // unit quaternion (w, x, y, z)
  double score = 0.0;
  Point2 contact_pixel;  // scene coordinates
};

class SceneDetector {
 public:
  virtual ~SceneDetector() = default;
  virtual std::vector<Detection> detect(const RgbImage& image, const std::vector<std::string>& vocabulary) const = 0;
};

class GraspProvider {
 public:
  virtual ~GraspProvider() = default;
  virtual std::vector<GraspProposal> propose(const DepthMap& depth, const BinaryMask& mask) const = 0;
};

// Returns a fixed detection list; with the vocabulary "objects" (or empty)
// everything is returned, otherwise only the named categories.
class MockSceneDetector : public SceneDetector {
 public:
  explicit MockSceneDetector(std::vector<Detection> detections) : detections_(std::move(detections)) {}
  std::vector<Detection> detect(const RgbImage& image, const std::vector<std::string>& vocabulary) const override;

 private:
  std::vector<Detection> detections_;
};

// Proposals at the mask centroid plus a 4 px grid over the mask's bounding
// box grown by `margin`, each jittered by up to 1 px from a hash of its grid
// position. Scores fall off with distance to the centroid; the gripper yaw
// follows the mask's principal axis.
class MockGraspProvider : public GraspProvider {
 public:
  explicit MockGraspProvider(int margin = 8) : margin_(margin) {}
  std::vector<GraspProposal> propose(const DepthMap& depth, const BinaryMask& mask) const override;

 private:
  int margin_;
};

struct Providers {
  const SceneDetector* detector = nullptr;
  const GraspProvider* grasps = nullptr;
};

std::vector<SceneObject> parse_scene(const RgbImage& image, const DepthMap& depth, const TaskSpec& task,
                                     const SceneDetector& detector);

// Runs the model on every object crop (resized to the model input, scores
// resized back to the crop).
void segment_objects(std::vector<SceneObject>& objects, const model::SegmentationModel& model, const TaskSpec& task);

struct SelectionScore {
  std::size_t area = 0;
  double certainty = 0.0;
};
SelectionScore score_object(const SceneObject& object, int verb_index, double tau);

// Index into `objects`. Ranks by area, then certainty, then box position
// (top-left first), so the choice does not depend on list order.
std::size_t select_object(const std::vector<SceneObject>& objects, int verb_index, double tau);

// Scene-sized mask of object pixels carrying `label_index`.
BinaryMask object_mask(const SceneObject& object, int label_index, int scene_width, int scene_height);

GraspProposal plan_grasp(const BinaryMask& region, const DepthMap& scene_depth, const GraspProvider& provider);

struct ObjectReport {
  Box box;
  std::string category;
  bool target = false;
  SelectionScore score;
};

struct PlanRecord {
  TaskSpec task;
  std::vector<ObjectReport> objects;
  std::size_t selected = 0;
  BinaryMask grasp_mask;       // scene-sized, graspable region of the selection
  BinaryMask functional_mask;  // scene-sized, verb region of the selection
  GraspProposal grasp;
  std::string detector = "mock-scene-detector";
  std::string grasp_provider = "mock-grasp-provider";
};

// Errors carry the failing stage: "detect", "segment", "select" or "plan".
PlanRecord run_task(const RgbImage& image, const DepthMap& depth, const TaskSpec& task,
                    const model::SegmentationModel& model, const Providers& providers);

// plan.json, grasp_mask.pgm, functional_mask.pgm and overlay.ppm.
void write_plan(const std::filesystem::path& dir, const PlanRecord& plan, const RgbImage& image);
nlohmann::json plan_to_json(const PlanRecord& plan);

}  // namespace affkit::graspsel
