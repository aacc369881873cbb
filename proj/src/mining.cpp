#include "affkit/mining.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include "affkit/error.hpp"
#include "affkit/random.hpp"

namespace affkit::mining {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(ClipKind kind) { return kind == ClipKind::kHandObject ? "hand_object" : "tool_object"; }

ClipKind parse_clip_kind(const std::string& text) {
  if (text == "hand_object") return ClipKind::kHandObject;
  if (text == "tool_object") return ClipKind::kToolObject;
  throw Error(ErrorCode::kFormatError, "unknown clip kind '" + text + "'");
}

std::size_t InteractionTimeline::position(int frame_index) const {
  const auto it = std::lower_bound(states.begin(), states.end(), frame_index,
                                   [](const ContactState& s, int f) { return s.frame_index < f; });
  if (it == states.end() || it->frame_index != frame_index)
    throw Error(ErrorCode::kInvalidArgument, clip_id + ": no frame " + std::to_string(frame_index));
  return static_cast<std::size_t>(it - states.begin());
}

void InteractionTimeline::validate() const {
  for (std::size_t i = 1; i < states.size(); ++i)
    if (states[i].frame_index <= states[i - 1].frame_index)
      throw Error(ErrorCode::kInvalidArgument, clip_id + ": frame indices must strictly increase");
  if (!frames.empty() && frames.size() != states.size())
    throw Error(ErrorCode::kInvalidArgument, clip_id + ": frame count differs from state count");
  position(contact_frame);
}

// ---------------------------------------------------------------- timeline IO

namespace {

json box_json(const std::optional<Box>& b) {
  if (!b) return nullptr;
  return json::array({b->x_min, b->y_min, b->x_max, b->y_max});
}

std::optional<Box> box_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw Error(ErrorCode::kFormatError, "a box has four coordinates");
  return Box(v[0], v[1], v[2], v[3]);
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

constexpr std::array<std::uint8_t, 3> kGraspTint = {128, 0, 160};
constexpr std::array<std::uint8_t, 3> kFunctionalTint = {0, 200, 0};

}  // namespace

void save_timeline(const fs::path& json_path, const InteractionTimeline& t) {
  t.validate();
  const fs::path dir = json_path.parent_path();
  const fs::path frame_dir = dir / "frames";
  fs::create_directories(frame_dir);
  json states = json::array();
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    const auto& s = t.states[i];
    char name[64];
    std::snprintf(name, sizeof(name), "_f%03d.ppm", s.frame_index);
    const std::string rel = "frames/" + t.clip_id + name;
    if (!t.frames.empty()) write_ppm(dir / rel, t.frames[i]);
    states.push_back({{"frame_index", s.frame_index},
                      {"frame", rel},
                      {"in_contact", s.in_contact},
                      {"hand_box", box_json(s.hand_box)},
                      {"object_box", box_json(s.object_box)},
                      {"tool_box", box_json(s.tool_box)}});
  }
  const json doc = {{"clip_id", t.clip_id},
                    {"kind", to_string(t.kind)},
                    {"narration_action", t.narration_action},
                    {"narration_object", t.narration_object},
                    {"paired_clip", t.paired_clip},
                    {"contact_frame", t.contact_frame},
                    {"states", states}};
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + json_path.string());
  out << doc.dump(2) << "\n";
}

InteractionTimeline load_timeline(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + json_path.string());
  InteractionTimeline t;
  try {
    const json doc = json::parse(in);
    t.clip_id = doc.at("clip_id").get<std::string>();
    t.kind = parse_clip_kind(doc.at("kind").get<std::string>());
    t.narration_action = doc.value("narration_action", "");
    t.narration_object = doc.value("narration_object", "");
    t.paired_clip = doc.value("paired_clip", "");
    t.contact_frame = doc.at("contact_frame").get<int>();
    for (const auto& s : doc.at("states")) {
      ContactState cs;
      cs.frame_index = s.at("frame_index").get<int>();
      cs.in_contact = s.at("in_contact").get<bool>();
      cs.hand_box = box_from(s.value("hand_box", json()));
      cs.object_box = box_from(s.value("object_box", json()));
      cs.tool_box = box_from(s.value("tool_box", json()));
      t.states.push_back(cs);
      t.frames.push_back(read_ppm(json_path.parent_path() / s.at("frame").get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, json_path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

std::vector<InteractionTimeline> load_timelines(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());
  std::vector<InteractionTimeline> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(load_timeline(entry.path()));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
  return out;
}

// ------------------------------------------------------------------- catalog

AffordanceCatalog::AffordanceCatalog(std::map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {
  for (const auto& [category, labels] : entries_)
    if (labels.empty() || labels.front() != "grasp")
      throw Error(ErrorCode::kInvalidArgument, "catalog entry '" + category + "' must start with grasp");
}

AffordanceCatalog AffordanceCatalog::kitchen() {
  return AffordanceCatalog({{"knife", {"grasp", "cut"}},
                            {"scissors", {"grasp", "cut"}},
                            {"spoon", {"grasp", "scoop"}},
                            {"mug", {"grasp", "contain"}}});
}

const std::vector<std::string>& AffordanceCatalog::affordances(const std::string& category) const {
  const auto it = entries_.find(category);
  if (it == entries_.end()) throw Error(ErrorCode::kInvalidArgument, "category '" + category + "' is not catalogued");
  return it->second;
}

std::vector<std::string> AffordanceCatalog::categories() const {
  std::vector<std::string> out;
  for (const auto& [c, labels] : entries_) out.push_back(c);
  return out;
}

std::vector<std::string> AffordanceCatalog::labels() const {
  std::set<std::string> functional;
  for (const auto& [c, labels] : entries_)
    for (std::size_t i = 1; i < labels.size(); ++i) functional.insert(labels[i]);
  std::vector<std::string> out = {"grasp"};
  out.insert(out.end(), functional.begin(), functional.end());
  return out;
}

// -------------------------------------------------------------------- config

void MiningConfig::validate() const {
  if (n_contact_points < 1) throw Error(ErrorCode::kInvalidArgument, "n_contact_points must be at least 1");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "iou_threshold must lie in (0, 1)");
  if (erosion_radius < 0) throw Error(ErrorCode::kInvalidArgument, "erosion_radius must be non-negative");
}

json config_to_json(const MiningConfig& c) {
  return {{"n_contact_points", c.n_contact_points},
          {"iou_threshold", c.iou_threshold},
          {"erosion_radius", c.erosion_radius},
          {"ransac", {{"threshold", c.ransac.threshold}, {"max_iters", c.ransac.max_iters}, {"seed", c.ransac.seed}}},
          {"average_before_projection", c.average_before_projection},
          {"seed", c.seed},
          {"grasp_verbs", c.grasp_verbs}};
}

bool accept_timeline(const InteractionTimeline& t, const MiningConfig& cfg, const AffordanceCatalog& catalog) {
  if (t.kind == ClipKind::kHandObject)
    return std::find(cfg.grasp_verbs.begin(), cfg.grasp_verbs.end(), t.narration_action) != cfg.grasp_verbs.end();
  const auto labels = catalog.labels();
  return t.narration_action != "grasp" &&
         std::find(labels.begin(), labels.end(), t.narration_action) != labels.end();
}

// ---------------------------------------------------------------- operations

int find_precontact_frame(const InteractionTimeline& t) {
  const std::size_t contact = t.position(t.contact_frame);
  for (std::size_t i = contact; i-- > 0;)
    if (!t.states[i].in_contact) return t.states[i].frame_index;
  throw Error(ErrorCode::kNoPrecontactFrame, t.clip_id + ": every frame before contact is in contact");
}

int find_precontact_frame_tool(const InteractionTimeline& t, const MiningConfig& cfg) {
  const std::size_t contact = t.position(t.contact_frame);
  for (std::size_t i = contact; i-- > 0;) {
    const auto& s = t.states[i];
    if (!s.tool_box || !s.object_box) continue;
    if (geometry::box_iou(*s.tool_box, *s.object_box) < cfg.iou_threshold) return s.frame_index;
  }
  throw Error(ErrorCode::kNoPrecontactFrame, t.clip_id + ": tool and object overlap in every earlier frame");
}

LocalizedPoint localize_graspable_point(const InteractionTimeline& t, const PerceptionClients& clients,
                                        const MiningConfig& cfg) {
  if (t.kind != ClipKind::kHandObject) throw Error(ErrorCode::kInvalidArgument, t.clip_id + " is not a hand clip");
  const int pre = find_precontact_frame(t);
  const ContactState& cs = t.state(t.contact_frame);
  if (!cs.hand_box || !cs.object_box)
    throw Error(ErrorCode::kInvalidArgument, t.clip_id + ": contact frame lacks a hand or object box");
  const RgbImage& contact_frame = t.frame(t.contact_frame);
  const RgbImage& pre_frame = t.frame(pre);

  const BinaryMask hand = clients.segment_points(contact_frame, {cs.hand_box->center()}, {});
  const PointSet contacts = geometry::sample_intersection_points(
      hand, *cs.object_box, static_cast<std::size_t>(cfg.n_contact_points),
      derive_seed({cfg.seed, fnv1a(t.clip_id), fnv1a("contact")}));

  const auto [src, dst] = clients.match(contact_frame, pre_frame);
  geometry::RansacOptions ro = cfg.ransac;
  ro.seed = derive_seed({cfg.ransac.seed, fnv1a(t.clip_id)});
  const auto fit = geometry::estimate_homography_ransac(src, dst, ro);

  Point2 p;
  if (cfg.average_before_projection) {
    p = geometry::project_point(fit.model, geometry::mean_point(contacts));
  } else {
    PointSet projected;
    for (const auto& c : contacts) projected.push_back(geometry::project_point(fit.model, c));
    p = geometry::mean_point(projected);
  }
  const auto& pre_box = t.state(pre).object_box;
  if (pre_box && !pre_box->contains(p))
    throw Error(ErrorCode::kCorrespondenceFailure, t.clip_id + ": projected grasp point leaves the object box");
  return {pre, p};
}

BinaryMask segment_in_box(const PerceptionClients& clients, const RgbImage& frame, const Box& box) {
  const PixelWindow win = pixel_window(box, frame.width(), frame.height());
  BinaryMask out(frame.width(), frame.height());
  if (win.width() == 0 || win.height() == 0) throw Error(ErrorCode::kEmptyMask, "box lies outside the frame");
  constexpr int kGrid = 5;
  for (int gy = 0; gy < kGrid; ++gy)
    for (int gx = 0; gx < kGrid; ++gx) {
      const int x = win.x0 + static_cast<int>((gx + 0.5) * win.width() / kGrid);
      const int y = win.y0 + static_cast<int>((gy + 0.5) * win.height() / kGrid);
      if (out.get(x, y)) continue;
      const BinaryMask region = clients.segment_points(frame, {{static_cast<double>(x), static_cast<double>(y)}}, {});
      if (region.empty()) continue;
      const Box b = region.bounding_box();
      if (b.x_min < win.x0 || b.y_min < win.y0 || b.x_max > win.x1 || b.y_max > win.y1) continue;
      out = out | region;
    }
  if (out.empty()) throw Error(ErrorCode::kEmptyMask, "no segment fits inside the box");
  return out;
}

LocalizedPoint localize_functional_point(const InteractionTimeline& t, const PerceptionClients& clients,
                                         const MiningConfig& cfg) {
  if (t.kind != ClipKind::kToolObject) throw Error(ErrorCode::kInvalidArgument, t.clip_id + " is not a tool clip");
  const int pre = find_precontact_frame_tool(t, cfg);
  const ContactState& s = t.state(pre);
  const RgbImage& frame = t.frame(pre);

  const BinaryMask tool = segment_in_box(clients, frame, *s.tool_box);
  std::vector<std::string> vocabulary;
  if (!t.narration_object.empty()) vocabulary.push_back(t.narration_object);
  Box target = *s.object_box;
  double best = 0.0;
  for (const auto& d : clients.detect_open_vocabulary(frame, vocabulary)) {
    const double iou = geometry::box_iou(d.box, *s.object_box);
    if (iou > best) {
      best = iou;
      target = d.box;
    }
  }
  const BinaryMask object = geometry::erode_mask(segment_in_box(clients, frame, target), cfg.erosion_radius);
  if (object.empty()) throw Error(ErrorCode::kEmptyMask, t.clip_id + ": erosion removed the whole object mask");
  return {pre, geometry::nearest_point_between_masks(tool, object)};
}

Point2 fallback_functional_point(const BinaryMask& object_mask, const Point2& grasp_point) {
  if (object_mask.empty()) throw Error(ErrorCode::kEmptyMask, "object mask is empty");
  const PointSet pixels = object_mask.pixels();
  const Point2 ref[] = {grasp_point};
  return geometry::farthest_point(ref, pixels);
}

Point2 transfer_functional_point(const PerceptionClients& clients, const RgbImage& tool_frame, const Box& tool_box,
                                 const Point2& functional_point, const RgbImage& hand_frame, const Box& hand_box) {
  if (!(tool_box.area() > 0.0 && hand_box.area() > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "correspondence boxes must have positive area");
  const Point2 p = clients.map_correspondence(tool_frame, tool_box, functional_point, hand_frame, hand_box);
  if (!hand_box.contains(p))
    throw Error(ErrorCode::kCorrespondenceFailure, "mapped functional point falls outside the target box");
  return p;
}

AffordanceSample generate_sample(const Point2& grasp_point, const Point2& functional_point, const RgbImage& frame,
                                 const Box& object_box, const PerceptionClients& clients,
                                 const std::string& functional_label) {
  if (!object_box.contains(grasp_point) || !object_box.contains(functional_point))
    throw Error(ErrorCode::kInvalidArgument, "prompt points must lie inside the object box");
  if (functional_label == "grasp") throw Error(ErrorCode::kInvalidArgument, "functional label must differ from grasp");
  BinaryMask grasp = clients.segment_points(frame, {grasp_point}, {functional_point});
  BinaryMask functional = clients.segment_points(frame, {functional_point}, {grasp_point});
  const BinaryMask overlap = grasp & functional;
  grasp = grasp.minus(overlap);
  functional = functional.minus(overlap);
  if (grasp.empty() || functional.empty())
    throw Error(ErrorCode::kDisjointnessViolation, "removing the overlap left an empty mask");

  const PixelWindow win = pixel_window(object_box, frame.width(), frame.height());
  AffordanceSample s;
  s.image = crop(frame, win);
  s.depth = clients.estimate_depth(s.image);
  s.masks.emplace("grasp", crop(grasp, win));
  s.masks.emplace(functional_label, crop(functional, win));
  for (const auto& [label, m] : s.masks)
    if (m.empty()) throw Error(ErrorCode::kEmptyMask, "mask '" + label + "' lies outside the object box");
  validate_sample(s);
  return s;
}

// ------------------------------------------------------------------ pipeline

MiningResult mine(const std::vector<InteractionTimeline>& timelines, const PerceptionClients& clients,
                  const MiningConfig& cfg, const AffordanceCatalog& catalog) {
  cfg.validate();
  std::map<std::string, const InteractionTimeline*> by_id;
  for (const auto& t : timelines)
    if (!by_id.emplace(t.clip_id, &t).second)
      throw Error(ErrorCode::kInvalidArgument, "duplicate clip id " + t.clip_id);

  MiningResult result;
  std::set<std::string> used_tools;
  for (const auto& [id, tp] : by_id) {
    const InteractionTimeline& t = *tp;
    if (t.kind != ClipKind::kHandObject) continue;
    if (!accept_timeline(t, cfg, catalog)) {
      ++result.skipped;
      continue;
    }
    std::string stage = "grasp";
    try {
      const LocalizedPoint g = localize_graspable_point(t, clients, cfg);
      const RgbImage& frame = t.frame(g.frame);
      const auto& box = t.state(g.frame).object_box;
      if (!box) throw Error(ErrorCode::kInvalidArgument, "grasp frame lacks an object box");

      stage = "category";
      std::string category;
      double best = 0.0;
      for (const auto& d : clients.detect_open_vocabulary(frame, catalog.categories())) {
        const double iou = geometry::box_iou(d.box, *box);
        if (iou > best) {
          best = iou;
          category = d.category;
        }
      }
      if (category.empty()) throw Error(ErrorCode::kNoDetections, "no catalogued object overlaps the object box");
      const auto& affordances = catalog.affordances(category);

      MinedSample m;
      m.id = t.clip_id;
      m.grasp_frame = g.frame;
      m.grasp_point = g.point;
      m.object_box = *box;
      std::string label;
      const auto paired = by_id.find(t.paired_clip);
      if (!t.paired_clip.empty() && paired != by_id.end() && paired->second->kind == ClipKind::kToolObject &&
          accept_timeline(*paired->second, cfg, catalog)) {
        stage = "functional";
        const InteractionTimeline& tool = *paired->second;
        used_tools.insert(tool.clip_id);
        const LocalizedPoint f = localize_functional_point(tool, clients, cfg);
        stage = "transfer";
        m.functional_point = transfer_functional_point(clients, tool.frame(f.frame), *tool.state(f.frame).tool_box,
                                                       f.point, frame, *box);
        m.functional_source = tool.clip_id;
        label = tool.narration_action;
        if (std::find(affordances.begin(), affordances.end(), label) == affordances.end())
          throw Error(ErrorCode::kInvalidArgument, "'" + label + "' is not an affordance of " + category);
      } else {
        stage = "fallback";
        if (affordances.size() < 2) throw Error(ErrorCode::kInvalidArgument, category + " has no functional affordance");
        m.functional_point = fallback_functional_point(segment_in_box(clients, frame, *box), g.point);
        m.functional_source = "farthest";
        label = affordances[1];
      }
      stage = "sample";
      m.sample = generate_sample(m.grasp_point, m.functional_point, frame, *box, clients, label);
      m.sample.object_category = category;
      m.sample.source_clip = t.clip_id;
      result.samples.push_back(std::move(m));
    } catch (const Error& e) {
      result.failures.push_back({t.clip_id, stage, e.message()});
    }
  }
  for (const auto& t : timelines)
    if (t.kind == ClipKind::kToolObject && !used_tools.count(t.clip_id)) ++result.skipped;
  return result;
}

void write_mining_output(const fs::path& out, const MiningResult& result, const MiningConfig& cfg,
                         const AffordanceCatalog& catalog) {
  std::vector<std::pair<std::string, AffordanceSample>> samples;
  for (const auto& m : result.samples) samples.emplace_back(m.id, m.sample);
  write_dataset(out, catalog.labels(), samples);

  fs::create_directories(out / "overlays");
  json records = json::array();
  for (const auto& m : result.samples) {
    RgbImage overlay = m.sample.image;
    for (const auto& [label, mask] : m.sample.masks)
      paint_overlay(overlay, mask, label == "grasp" ? kGraspTint : kFunctionalTint, 0.5);
    const PixelWindow win = pixel_window(m.object_box, 1 << 20, 1 << 20);
    for (const auto& [p, color] : {std::pair{m.grasp_point, kGraspTint}, std::pair{m.functional_point, kFunctionalTint}}) {
      const int cx = static_cast<int>(std::lround(p.x)) - win.x0, cy = static_cast<int>(std::lround(p.y)) - win.y0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (cx + dx >= 0 && cy + dy >= 0 && cx + dx < overlay.width() && cy + dy < overlay.height())
            overlay.set_pixel(cx + dx, cy + dy, color);
    }
    write_ppm(out / "overlays" / (m.id + ".ppm"), overlay);
    records.push_back({{"id", m.id},
                       {"category", m.sample.object_category},
                       {"grasp_frame", m.grasp_frame},
                       {"grasp_point", point_json(m.grasp_point)},
                       {"functional_point", point_json(m.functional_point)},
                       {"object_box", box_json(m.object_box)},
                       {"functional_source", m.functional_source}});
  }
  json failures = json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"clip_id", f.clip_id}, {"stage", f.stage}, {"message", f.message}});
  const json report = {{"config", config_to_json(cfg)},
                       {"samples", records},
                       {"failures", failures},
                       {"skipped", result.skipped}};
  std::ofstream rep(out / "mining_report.json", std::ios::trunc);
  if (!rep) throw Error(ErrorCode::kIoError, "cannot write mining report in " + out.string());
  rep << report.dump(2) << "\n";
}

}  // namespace affkit::mining
