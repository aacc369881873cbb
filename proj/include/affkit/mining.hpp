#pragma once

// Affordance mask mining from interaction clips.
//
// A hand-object clip yields the graspable point: the hand is segmented at the
// contact frame, contact points are sampled where it overlaps the object box,
// and their mean is carried back to the last non-contact frame through a
// RANSAC homography. A paired tool-object clip yields the functional point:
// the tool pixel closest to the (eroded) target object just before they
// touch, transferred into the hand clip by box correspondence. Without a
// paired clip the object pixel farthest from the grasp point is used. Both
// points then prompt the segmenter for two disjoint masks on the object crop.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "affkit/dataset.hpp"
#include "affkit/geometry.hpp"
#include "affkit/image.hpp"

namespace affkit::mining {

using geometry::BinaryMask;
using geometry::Box;
using geometry::Point2;
using geometry::PointSet;

struct ContactState {
  int frame_index = 0;
  bool in_contact = false;
  std::optional<Box> hand_box;
  std::optional<Box> object_box;
  std::optional<Box> tool_box;
};

enum class ClipKind { kHandObject, kToolObject };
const char* to_string(ClipKind kind);
ClipKind parse_clip_kind(const std::string& text);

struct InteractionTimeline {
  std::string clip_id;
  ClipKind kind = ClipKind::kHandObject;
  std::string narration_action;  // verb
  std::string narration_object;  // noun, used to pick the target detection
  std::string paired_clip;       // tool clip that supplies the functional point
  int contact_frame = 0;
  std::vector<ContactState> states;  // strictly increasing frame_index
  std::vector<RgbImage> frames;      // parallel to states

  // Position of `frame_index` in states; throws InvalidArgument when absent.
  std::size_t position(int frame_index) const;
  const ContactState& state(int frame_index) const { return states[position(frame_index)]; }
  const RgbImage& frame(int frame_index) const { return frames[position(frame_index)]; }
  void validate() const;
};

// JSON document next to its frames; frame paths are relative to the document.
void save_timeline(const std::filesystem::path& json_path, const InteractionTimeline& t);
InteractionTimeline load_timeline(const std::filesystem::path& json_path);
// Every *.json file in a directory, sorted by clip_id.
std::vector<InteractionTimeline> load_timelines(const std::filesystem::path& dir);

struct Detection {
  Box box;
  std::string category;
};

// External perception models. Implementations must be deterministic.
class PerceptionClients {
 public:
  virtual ~PerceptionClients() = default;
  virtual ContactState detect_hand_object(const RgbImage& frame) const = 0;
  virtual BinaryMask segment_points(const RgbImage& frame, const PointSet& positive, const PointSet& negative) const = 0;
  // An empty vocabulary or the single word "objects" means every category.
  virtual std::vector<Detection> detect_open_vocabulary(const RgbImage& frame,
                                                        const std::vector<std::string>& vocabulary) const = 0;
  virtual Point2 map_correspondence(const RgbImage& frame_a, const Box& box_a, const Point2& point_a,
                                    const RgbImage& frame_b, const Box& box_b) const = 0;
  virtual DepthMap estimate_depth(const RgbImage& frame) const = 0;
  virtual std::pair<PointSet, PointSet> match(const RgbImage& frame_a, const RgbImage& frame_b) const = 0;
};

// Object category -> affordance labels, "grasp" always first.
class AffordanceCatalog {
 public:
  AffordanceCatalog() = default;
  explicit AffordanceCatalog(std::map<std::string, std::vector<std::string>> entries);
  static AffordanceCatalog kitchen();

  const std::vector<std::string>& affordances(const std::string& category) const;
  bool has(const std::string& category) const { return entries_.count(category) != 0; }
  std::vector<std::string> categories() const;
  // Union of all labels, "grasp" first, then alphabetical.
  std::vector<std::string> labels() const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

struct MiningConfig {
  int n_contact_points = 5;
  double iou_threshold = 0.05;
  int erosion_radius = 3;
  geometry::RansacOptions ransac{};
  bool average_before_projection = true;
  std::uint64_t seed = 0;
  std::vector<std::string> grasp_verbs = {"take", "hold", "pick", "grab"};

  void validate() const;
};
nlohmann::json config_to_json(const MiningConfig& cfg);

// Narration pre-filter: hand clips need a grasp verb, tool clips a verb that
// the catalog lists as a functional affordance.
bool accept_timeline(const InteractionTimeline& t, const MiningConfig& cfg, const AffordanceCatalog& catalog);

int find_precontact_frame(const InteractionTimeline& t);
int find_precontact_frame_tool(const InteractionTimeline& t, const MiningConfig& cfg);

struct LocalizedPoint {
  int frame = 0;
  Point2 point;
};

LocalizedPoint localize_graspable_point(const InteractionTimeline& t, const PerceptionClients& clients,
                                        const MiningConfig& cfg);
LocalizedPoint localize_functional_point(const InteractionTimeline& t, const PerceptionClients& clients,
                                         const MiningConfig& cfg);
Point2 fallback_functional_point(const BinaryMask& object_mask, const Point2& grasp_point);
Point2 transfer_functional_point(const PerceptionClients& clients, const RgbImage& tool_frame, const Box& tool_box,
                                 const Point2& functional_point, const RgbImage& hand_frame, const Box& hand_box);

// Whole-object mask from point prompts on a 5x5 grid inside `box`; regions that
// spill outside the box (background, arms, neighbours) are discarded.
BinaryMask segment_in_box(const PerceptionClients& clients, const RgbImage& frame, const Box& box);

AffordanceSample generate_sample(const Point2& grasp_point, const Point2& functional_point, const RgbImage& frame,
                                 const Box& object_box, const PerceptionClients& clients,
                                 const std::string& functional_label);

struct MinedSample {
  std::string id;  // hand clip id
  AffordanceSample sample;
  int grasp_frame = 0;
  Point2 grasp_point;       // full-frame coordinates of the grasp frame
  Point2 functional_point;  // same frame
  Box object_box;
  std::string functional_source;  // paired clip id or "farthest"
};

struct MiningFailure {
  std::string clip_id;
  std::string stage;
  std::string message;
};

struct MiningResult {
  std::vector<MinedSample> samples;  // sorted by id
  std::vector<MiningFailure> failures;
  int skipped = 0;  // rejected by the narration filter or unpaired tool clips
};

// Mines every accepted hand clip; tool clips are consumed through pairing.
MiningResult mine(const std::vector<InteractionTimeline>& timelines, const PerceptionClients& clients,
                  const MiningConfig& cfg, const AffordanceCatalog& catalog);

// Dataset directory plus overlays/<id>.ppm and mining_report.json.
void write_mining_output(const std::filesystem::path& out, const MiningResult& result, const MiningConfig& cfg,
                         const AffordanceCatalog& catalog);

}  // namespace affkit::mining
