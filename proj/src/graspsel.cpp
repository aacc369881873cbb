#include "affkit/graspsel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "affkit/error.hpp"
#include "affkit/random.hpp"

namespace affkit::graspsel {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(TaskMode mode) { return mode == TaskMode::kUseTool ? "use_tool" : "handover"; }

TaskSpec parse_task(const std::string& text, TaskMode mode) {
  std::istringstream in(text);
  TaskSpec t;
  t.mode = mode;
  std::string extra;
  if (!(in >> t.verb >> t.target) || (in >> extra))
    throw Error(ErrorCode::kInvalidArgument, "task must read '<verb> <target>', got '" + text + "'");
  return t;
}

std::vector<Detection> MockSceneDetector::detect(const RgbImage&, const std::vector<std::string>& vocabulary) const {
  const bool everything = vocabulary.empty() || (vocabulary.size() == 1 && vocabulary[0] == "objects");
  std::vector<Detection> out;
  for (const auto& d : detections_)
    if (everything || std::find(vocabulary.begin(), vocabulary.end(), d.category) != vocabulary.end())
      out.push_back(d);
  return out;
}

std::vector<GraspProposal> MockGraspProvider::propose(const DepthMap& depth, const BinaryMask& mask) const {
  if (mask.width() != depth.width() || mask.height() != depth.height())
    throw Error(ErrorCode::kShapeMismatch, "grasp mask and depth differ in size");
  if (mask.empty()) return {};
  const auto pixels = mask.pixels();
  const Point2 c = geometry::mean_point(pixels);
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pixels) {
    sxx += (p.x - c.x) * (p.x - c.x);
    syy += (p.y - c.y) * (p.y - c.y);
    sxy += (p.x - c.x) * (p.y - c.y);
  }
  const double yaw = 0.5 * std::atan2(2.0 * sxy, sxx - syy);

  auto make = [&](const Point2& p) {
    const int px = std::clamp(static_cast<int>(std::lround(p.x)), 0, depth.width() - 1);
    const int py = std::clamp(static_cast<int>(std::lround(p.y)), 0, depth.height() - 1);
    GraspProposal g;
    g.contact_pixel = p;
    g.translation = {p.x * 1e-3, p.y * 1e-3, depth.at(px, py)};
    g.rotation = {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
    g.score = 1.0 / (1.0 + geometry::distance(p, c));
    return g;
  };
  std::vector<GraspProposal> out = {make(c)};
  const Box b = mask.bounding_box();
  const int x0 = std::max(0, static_cast<int>(b.x_min) - margin_), y0 = std::max(0, static_cast<int>(b.y_min) - margin_);
  const int x1 = std::min(depth.width(), static_cast<int>(b.x_max) + margin_);
  const int y1 = std::min(depth.height(), static_cast<int>(b.y_max) + margin_);
  for (int y = y0; y < y1; y += 4)
    for (int x = x0; x < x1; x += 4) {
      const std::uint64_t h = derive_seed({static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y)});
      const double jx = static_cast<double>(h % 3) - 1.0, jy = static_cast<double>((h / 3) % 3) - 1.0;
      out.push_back(make({std::clamp(x + jx, 0.0, depth.width() - 1.0), std::clamp(y + jy, 0.0, depth.height() - 1.0)}));
    }
  return out;
}

std::vector<SceneObject> parse_scene(const RgbImage& image, const DepthMap& depth, const TaskSpec& task,
                                     const SceneDetector& detector) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "scene image is empty");
  if (depth.width() != image.width() || depth.height() != image.height())
    throw Error(ErrorCode::kShapeMismatch, "scene depth and image differ in size");
  const auto detections = detector.detect(image, {"objects"});
  std::vector<SceneObject> out;
  for (const auto& d : detections) {
    SceneObject o;
    o.box = d.box;
    o.category_hint = d.category;
    o.is_target = d.category == task.target;
    o.window = pixel_window(d.box, image.width(), image.height());
    if (o.window.width() == 0 || o.window.height() == 0) continue;
    o.crop = crop(image, o.window);
    o.depth_crop = crop(depth, o.window);
    out.push_back(std::move(o));
  }
  if (out.empty()) throw Error(ErrorCode::kNoDetections, "the detector found no objects");
  return out;
}

namespace {

// Bilinear resize of every score column.
ad::Matrix resize_scores(const ad::Matrix& scores, int w, int h, int out_w, int out_h) {
  if (w == out_w && h == out_h) return scores;
  ad::Tape tape;
  return ad::resize_bilinear(tape.constant(scores), h, w, out_h, out_w).value();
}

}  // namespace

void segment_objects(std::vector<SceneObject>& objects, const model::SegmentationModel& model, const TaskSpec& task) {
  const auto& labels = model.config().labels;
  for (const auto& needed : {std::string("grasp"), task.verb})
    if (std::find(labels.begin(), labels.end(), needed) == labels.end())
      throw Error(ErrorCode::kVocabularyMismatch, "'" + needed + "' is not in the model vocabulary");
  const int n = model.config().input_size;
  for (auto& o : objects) {
    if (o.is_target) continue;
    const RgbImage img = resize_bilinear(o.crop, n, n);
    const DepthMap dep = resize_bilinear(o.depth_crop, n, n);
    const auto out = model.segment(img, &dep);
    o.scores = resize_scores(out.scores, n, n, o.crop.width(), o.crop.height());
    o.labels = model::labels_from_scores(o.scores, o.crop.width(), o.crop.height(), model.config().tau);
  }
}

SelectionScore score_object(const SceneObject& object, int verb_index, double tau) {
  SelectionScore s;
  if (object.scores.size() == 0) return s;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < object.scores.rows(); ++i) {
    const double v = object.scores(i, verb_index);
    if (v >= tau) {
      ++s.area;
      sum += v;
    }
  }
  if (s.area > 0) s.certainty = sum / static_cast<double>(s.area);
  return s;
}

std::size_t select_object(const std::vector<SceneObject>& objects, int verb_index, double tau) {
  std::optional<std::size_t> best;
  SelectionScore best_score;
  auto key = [](const Box& b) { return std::make_tuple(b.y_min, b.x_min, b.y_max, b.x_max); };
  bool any_candidate = false;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].is_target) continue;
    any_candidate = true;
    const SelectionScore s = score_object(objects[i], verb_index, tau);
    if (s.area == 0) continue;
    const bool better = !best || s.area > best_score.area ||
                        (s.area == best_score.area && (s.certainty > best_score.certainty ||
                                                       (s.certainty == best_score.certainty &&
                                                        key(objects[i].box) < key(objects[*best].box))));
    if (better) {
      best = i;
      best_score = s;
    }
  }
  if (!any_candidate) throw Error(ErrorCode::kInvalidArgument, "no object other than the target");
  if (!best) throw Error(ErrorCode::kNoCapableObject, "no object shows the requested affordance");
  return *best;
}

BinaryMask object_mask(const SceneObject& object, int label_index, int scene_width, int scene_height) {
  BinaryMask m(scene_width, scene_height);
  for (int y = 0; y < object.labels.height; ++y)
    for (int x = 0; x < object.labels.width; ++x)
      if (object.labels.at(x, y) == label_index) m.set(object.window.x0 + x, object.window.y0 + y);
  return m;
}

GraspProposal plan_grasp(const BinaryMask& region, const DepthMap& scene_depth, const GraspProvider& provider) {
  if (region.empty()) throw Error(ErrorCode::kNoValidGrasp, "the selected object has no pixels for this mode");
  std::optional<GraspProposal> best;
  for (const auto& g : provider.propose(scene_depth, region)) {
    const int x = static_cast<int>(std::lround(g.contact_pixel.x)), y = static_cast<int>(std::lround(g.contact_pixel.y));
    if (!region.in_bounds(x, y) || !region.get(x, y) || !std::isfinite(g.score)) continue;
    if (!best || g.score > best->score) best = g;
  }
  if (!best) throw Error(ErrorCode::kNoValidGrasp, "every grasp proposal falls outside the region");
  return *best;
}

PlanRecord run_task(const RgbImage& image, const DepthMap& depth, const TaskSpec& task,
                    const model::SegmentationModel& model, const Providers& providers) {
  if (providers.detector == nullptr || providers.grasps == nullptr)
    throw Error(ErrorCode::kInvalidArgument, "both providers are required");
  auto staged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw e.stage().empty() ? e.with_stage(stage) : e;
    }
  };
  PlanRecord plan;
  plan.task = task;
  auto objects = staged("detect", [&] { return parse_scene(image, depth, task, *providers.detector); });
  staged("segment", [&] {
    segment_objects(objects, model, task);
    return 0;
  });
  const auto& labels = model.config().labels;
  const int verb = static_cast<int>(std::find(labels.begin(), labels.end(), task.verb) - labels.begin());
  const int grasp = static_cast<int>(std::find(labels.begin(), labels.end(), "grasp") - labels.begin());
  const double tau = model.config().tau;
  plan.selected = staged("select", [&] { return select_object(objects, verb, tau); });
  for (const auto& o : objects)
    plan.objects.push_back({o.box, o.category_hint, o.is_target, score_object(o, verb, tau)});
  const SceneObject& chosen = objects[plan.selected];
  plan.grasp_mask = object_mask(chosen, grasp, image.width(), image.height());
  plan.functional_mask = object_mask(chosen, verb, image.width(), image.height());
  plan.grasp = staged("plan", [&] {
    return plan_grasp(task.mode == TaskMode::kUseTool ? plan.grasp_mask : plan.functional_mask, depth,
                      *providers.grasps);
  });
  return plan;
}

namespace {
json box_json(const Box& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }
}  // namespace

json plan_to_json(const PlanRecord& p) {
  json objects = json::array();
  for (const auto& o : p.objects)
    objects.push_back({{"box", box_json(o.box)},
                       {"category", o.category},
                       {"target", o.target},
                       {"area", o.score.area},
                       {"certainty", o.score.certainty}});
  const auto& g = p.grasp;
  return {{"task", {{"verb", p.task.verb}, {"target", p.task.target}, {"mode", to_string(p.task.mode)}}},
          {"objects", objects},
          {"selected", p.selected},
          {"selected_box", box_json(p.objects.at(p.selected).box)},
          {"masks", {{"grasp", "grasp_mask.pgm"}, {"functional", "functional_mask.pgm"}}},
          {"grasp",
           {{"translation", g.translation},
            {"rotation_wxyz", g.rotation},
            {"score", g.score},
            {"contact_pixel", {g.contact_pixel.x, g.contact_pixel.y}}}},
          {"providers", {{"detector", p.detector}, {"grasp", p.grasp_provider}}}};
}

void write_plan(const fs::path& dir, const PlanRecord& plan, const RgbImage& image) {
  fs::create_directories(dir);
  write_mask_pgm(dir / "grasp_mask.pgm", plan.grasp_mask);
  write_mask_pgm(dir / "functional_mask.pgm", plan.functional_mask);
  RgbImage overlay = image;
  paint_overlay(overlay, plan.grasp_mask, {128, 0, 160}, 0.5);
  paint_overlay(overlay, plan.functional_mask, {0, 200, 0}, 0.5);
  const int cx = static_cast<int>(std::lround(plan.grasp.contact_pixel.x));
  const int cy = static_cast<int>(std::lround(plan.grasp.contact_pixel.y));
  for (int d = -3; d <= 3; ++d) {
    if (cx + d >= 0 && cx + d < overlay.width()) overlay.set_pixel(cx + d, cy, {255, 255, 0});
    if (cy + d >= 0 && cy + d < overlay.height()) overlay.set_pixel(cx, cy + d, {255, 255, 0});
  }
  write_ppm(dir / "overlay.ppm", overlay);
  std::ofstream out(dir / "plan.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write plan in " + dir.string());
  out << plan_to_json(plan).dump(2) << "\n";
}

}  // namespace affkit::graspsel
