#include "affkit/world.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "affkit/error.hpp"
#include "affkit/palette.hpp"
#include "affkit/random.hpp"
#include "affkit/stub_perception.hpp"
#include "affkit/synth_shapes.hpp"

namespace affkit::world {

namespace fs = std::filesystem;
using nlohmann::json;
using palette::Rgb;

namespace {

constexpr int kFrameWidth = 128, kFrameHeight = 96;
constexpr int kPart = 24, kThick = 8;
constexpr int kContactFrame = 4;
constexpr int kApproachGaps[] = {22, 16, 10, 4};        // hand tip below the tool, rows
constexpr int kToolGaps[] = {30, 22, 14, 6, -10, -16};  // blade tip to loaf, columns
constexpr int kHandWidth = 6, kHandOverlap = 5;

struct Rect {
  int x0 = 0, y0 = 0, w = 0, h = 0;
  bool contains(int x, int y) const { return x >= x0 && y >= y0 && x < x0 + w && y < y0 + h; }
  bool overlaps(const Rect& o, int margin) const {
    return x0 - margin < o.x0 + o.w && o.x0 < x0 + w + margin && y0 - margin < o.y0 + o.h && o.y0 < y0 + h + margin;
  }
  Box box() const { return Box(x0, y0, x0 + w, y0 + h); }
};

struct Layer {
  Rect rect;
  Rgb color;
  bool jitter = true;
};

Rgb pick(Rng& rng, std::span<const Rgb> colors) { return colors[uniform_index(rng, colors.size())]; }

// Texture noise is a function of the world position so that a static surface
// looks the same from every camera offset.
std::uint8_t noisy(std::uint64_t seed, int wx, int wy, int ch, std::uint8_t v, int amount) {
  const auto h = derive_seed({seed, static_cast<std::uint64_t>(wx + 4096), static_cast<std::uint64_t>(wy + 4096),
                              static_cast<std::uint64_t>(ch)});
  const int d = static_cast<int>(h % static_cast<std::uint64_t>(2 * amount + 1)) - amount;
  return static_cast<std::uint8_t>(std::clamp(v + d, 0, 255));
}

// Layers are painted in order; later ones cover earlier ones.
RgbImage render(std::uint64_t texture_seed, const Rgb& table, const std::vector<Layer>& layers, int ox, int oy) {
  RgbImage img(kFrameWidth, kFrameHeight);
  for (int y = 0; y < kFrameHeight; ++y)
    for (int x = 0; x < kFrameWidth; ++x) {
      const int wx = x + ox, wy = y + oy;
      Rgb c = table;
      bool jitter = true;
      for (const auto& l : layers)
        if (l.rect.contains(wx, wy)) {
          c = l.color;
          jitter = l.jitter;
        }
      if (jitter)
        for (int ch = 0; ch < 3; ++ch) c[static_cast<std::size_t>(ch)] = noisy(texture_seed, wx, wy, ch, c[ch], 6);
      img.set_pixel(x, y, c);
    }
  return img;
}

Box shifted(const Box& b, const Point2& offset) {
  return Box(b.x_min - offset.x, b.y_min - offset.y, b.x_max - offset.x, b.y_max - offset.y);
}

json box_json(const Box& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }
Box box_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Box(v.at(0), v.at(1), v.at(2), v.at(3));
}

}  // namespace

Point2 MiningTruth::expected_grasp(int frame) const {
  const auto& o = camera_offsets.at(static_cast<std::size_t>(frame));
  return {grasp_world.x - o.x, grasp_world.y - o.y};
}
Box MiningTruth::blade_in_frame(int frame) const {
  return shifted(blade_world, camera_offsets.at(static_cast<std::size_t>(frame)));
}
Box MiningTruth::handle_in_frame(int frame) const {
  return shifted(handle_world, camera_offsets.at(static_cast<std::size_t>(frame)));
}

json truth_to_json(const MiningTruth& t) {
  json offsets = json::array();
  for (const auto& o : t.camera_offsets) offsets.push_back({o.x, o.y});
  return {{"scene_id", t.scene_id},
          {"camera_offsets", offsets},
          {"grasp_world", {t.grasp_world.x, t.grasp_world.y}},
          {"handle_world", box_json(t.handle_world)},
          {"blade_world", box_json(t.blade_world)},
          {"has_tool_clip", t.has_tool_clip}};
}

MiningTruth truth_from_json(const json& j) {
  MiningTruth t;
  try {
    t.scene_id = j.at("scene_id").get<std::string>();
    for (const auto& o : j.at("camera_offsets")) t.camera_offsets.push_back({o.at(0).get<double>(), o.at(1).get<double>()});
    t.grasp_world = {j.at("grasp_world").at(0).get<double>(), j.at("grasp_world").at(1).get<double>()};
    t.handle_world = box_from(j.at("handle_world"));
    t.blade_world = box_from(j.at("blade_world"));
    t.has_tool_clip = j.at("has_tool_clip").get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("truth record: ") + e.what());
  }
  return t;
}

MiningScene make_mining_scene(const std::string& scene_id, std::uint64_t seed, double tool_clip_fraction) {
  Rng rng(seed);
  const Rgb table = pick(rng, palette::kTable);
  const Rgb handle_color = pick(rng, palette::kHandle);
  const Rgb blade_color = pick(rng, palette::kBlade);
  const bool handle_left = uniform01(rng) < 0.5;
  const bool with_tool_clip = uniform01(rng) < tool_clip_fraction;
  const int tx = 24 + static_cast<int>(uniform_index(rng, 33));
  const int ty = 24 + static_cast<int>(uniform_index(rng, 17));

  const Rect handle{handle_left ? tx : tx + kPart, ty, kPart, kThick};
  const Rect blade{handle_left ? tx + kPart : tx, ty, kPart, kThick};
  const int hand_x = handle.x0 + kPart / 2 - kHandWidth / 2;

  MiningScene scene;
  MiningTruth& truth = scene.truth;
  truth.scene_id = scene_id;
  truth.handle_world = handle.box();
  truth.blade_world = blade.box();
  truth.grasp_world = {hand_x + (kHandWidth - 1) / 2.0, ty + kThick - kHandOverlap + (kHandOverlap - 1) / 2.0};
  truth.has_tool_clip = with_tool_clip;

  // Markers stay clear of the tool and the hand's path so that occlusion never
  // moves a centroid.
  const Rect tool_zone{tx, ty, 2 * kPart, kThick};
  const Rect hand_zone{hand_x, ty, kHandWidth, 1000};
  std::vector<Layer> markers;
  for (int id = 0, tries = 0; id < palette::kMarkerCount && tries < 400; ++tries) {
    const Rect m{20 + static_cast<int>(uniform_index(rng, 86)), 20 + static_cast<int>(uniform_index(rng, 54)), 3, 3};
    if (m.overlaps(tool_zone, 3) || m.overlaps(hand_zone, 4)) continue;
    if (std::any_of(markers.begin(), markers.end(), [&](const Layer& l) { return l.rect.overlaps(m, 2); })) continue;
    markers.push_back({m, palette::marker_color(id), false});
    ++id;
  }

  const mining::StubPerception detector;
  const std::uint64_t texture = derive_seed({seed, fnv1a("texture")});

  auto& hand_clip = scene.hand_clip;
  hand_clip.clip_id = scene_id + "_hand";
  hand_clip.kind = mining::ClipKind::kHandObject;
  hand_clip.narration_action = "take";
  hand_clip.narration_object = "knife";
  hand_clip.contact_frame = kContactFrame;
  if (with_tool_clip) hand_clip.paired_clip = scene_id + "_tool";
  Point2 offset{0.0, 0.0};
  for (int f = 0; f < 6; ++f) {
    if (f > 0) {
      offset.x += static_cast<double>(uniform_index(rng, 7)) - 3.0;
      offset.y += static_cast<double>(uniform_index(rng, 7)) - 3.0;
    }
    truth.camera_offsets.push_back(offset);
    const int tip = f < kContactFrame ? ty + kThick + kApproachGaps[f] : ty + kThick - kHandOverlap;
    std::vector<Layer> layers = markers;
    layers.push_back({handle, handle_color});
    layers.push_back({blade, blade_color});
    layers.push_back({Rect{hand_x, tip, kHandWidth, 1000}, palette::kSkin[0]});
    RgbImage frame = render(texture, table, layers, static_cast<int>(offset.x), static_cast<int>(offset.y));
    mining::ContactState s = detector.detect_hand_object(frame);
    s.frame_index = f;
    hand_clip.states.push_back(s);
    hand_clip.frames.push_back(std::move(frame));
  }

  if (with_tool_clip) {
    auto& tool_clip = scene.tool_clip;
    tool_clip.clip_id = scene_id + "_tool";
    tool_clip.kind = mining::ClipKind::kToolObject;
    tool_clip.narration_action = "cut";
    tool_clip.narration_object = "bread";
    tool_clip.contact_frame = kContactFrame;
    const int y = 30 + static_cast<int>(uniform_index(rng, 21));
    const int loaf_x = handle_left ? 96 : 8;
    const Rect loaf{loaf_x, y - 8, 24, 24};
    for (int f = 0; f < 6; ++f) {
      const int x0 = handle_left ? loaf_x - kToolGaps[f] - 2 * kPart : loaf_x + 24 + kToolGaps[f];
      const Rect h{handle_left ? x0 : x0 + kPart, y, kPart, kThick};
      const Rect b{handle_left ? x0 + kPart : x0, y, kPart, kThick};
      const Rect grip{h.x0 + kPart / 2 - kHandWidth / 2, y + kThick - 3, kHandWidth, 1000};
      const std::vector<Layer> layers = {{loaf, palette::kBread[0]}, {h, handle_color}, {b, blade_color},
                                         {grip, palette::kSkin[0]}};
      RgbImage frame = render(texture ^ 0x5a5a5a5aULL, table, layers, 0, 0);
      mining::ContactState s = detector.detect_hand_object(frame);
      s.frame_index = f;
      tool_clip.states.push_back(s);
      tool_clip.frames.push_back(std::move(frame));
    }
  }
  return scene;
}

GraspScene make_grasp_scene(const std::string& scene_id, std::uint64_t seed) {
  constexpr int kCell = 64, kCols = 4, kRows = 2;
  Rng rng(seed);
  const int table = static_cast<int>(uniform_index(rng, std::size(palette::kTable)));
  std::vector<int> cells(kCols * kRows);
  for (int i = 0; i < kCols * kRows; ++i) cells[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[uniform_index(rng, i)]);
  const int spoons = 1 + static_cast<int>(uniform_index(rng, 2));

  std::vector<synth::ShapeKind> kinds(cells.size(), synth::ShapeKind::kEmpty);
  kinds[static_cast<std::size_t>(cells[0])] = synth::ShapeKind::kCake;
  kinds[static_cast<std::size_t>(cells[1])] = synth::ShapeKind::kKnife;
  for (int s = 0; s < spoons; ++s) kinds[static_cast<std::size_t>(cells[2 + s])] = synth::ShapeKind::kSpoon;

  GraspScene scene;
  scene.id = scene_id;
  scene.image = RgbImage(kCols * kCell, kRows * kCell);
  scene.depth = DepthMap(kCols * kCell, kRows * kCell);
  synth::ShapesOptions opt;
  opt.size = kCell;
  for (int c = 0; c < kCols * kRows; ++c) {
    const int cx = (c % kCols) * kCell, cy = (c / kCols) * kCell;
    const auto kind = kinds[static_cast<std::size_t>(c)];
    const AffordanceSample cell =
        synth::make_shape_cell(opt, derive_seed({seed, static_cast<std::uint64_t>(c)}), kind, table);
    for (int y = 0; y < kCell; ++y)
      for (int x = 0; x < kCell; ++x) {
        scene.image.set_pixel(cx + x, cy + y, cell.image.pixel(x, y));
        scene.depth.at(cx + x, cy + y) = cell.depth.at(x, y);
      }
    if (kind == synth::ShapeKind::kEmpty) continue;
    PlantedObject obj;
    obj.box = Box(cx, cy, cx + kCell, cy + kCell);
    obj.category = cell.object_category;
    obj.target = kind == synth::ShapeKind::kCake;
    const Point2 origin{-static_cast<double>(cx), -static_cast<double>(cy)};
    if (const auto& g = cell.masks.at("grasp"); !g.empty()) obj.grasp_part = shifted(g.bounding_box(), origin);
    if (const auto& f = cell.masks.at("cut"); !f.empty()) obj.function_part = shifted(f.bounding_box(), origin);
    if (kind == synth::ShapeKind::kKnife) scene.capable = static_cast<int>(scene.objects.size());
    scene.objects.push_back(obj);
  }
  return scene;
}

void save_grasp_scene(const fs::path& dir, const GraspScene& scene) {
  fs::create_directories(dir);
  write_ppm(dir / "image.ppm", scene.image);
  write_pgm(dir / "depth.pgm", scene.depth);
  json objects = json::array();
  for (const auto& o : scene.objects)
    objects.push_back({{"box", box_json(o.box)},
                       {"category", o.category},
                       {"target", o.target},
                       {"grasp_part", o.grasp_part.area() > 0 ? box_json(o.grasp_part) : json()},
                       {"function_part", o.function_part.area() > 0 ? box_json(o.function_part) : json()}});
  const json doc = {{"id", scene.id},
                    {"task", {{"verb", scene.verb}, {"target", scene.target}}},
                    {"capable", scene.capable},
                    {"objects", objects}};
  std::ofstream(dir / "scene.json", std::ios::trunc) << doc.dump(2) << "\n";
}

GraspScene load_grasp_scene(const fs::path& dir) {
  std::ifstream in(dir / "scene.json");
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + (dir / "scene.json").string());
  GraspScene s;
  try {
    const json doc = json::parse(in);
    s.id = doc.at("id").get<std::string>();
    s.verb = doc.at("task").at("verb").get<std::string>();
    s.target = doc.at("task").at("target").get<std::string>();
    s.capable = doc.at("capable").get<int>();
    for (const auto& o : doc.at("objects")) {
      PlantedObject p;
      p.box = box_from(o.at("box"));
      p.category = o.at("category").get<std::string>();
      p.target = o.at("target").get<bool>();
      if (!o.at("grasp_part").is_null()) p.grasp_part = box_from(o.at("grasp_part"));
      if (!o.at("function_part").is_null()) p.function_part = box_from(o.at("function_part"));
      s.objects.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, dir.string() + "/scene.json: " + e.what());
  }
  s.image = read_ppm(dir / "image.ppm");
  s.depth = read_depth_pgm(dir / "depth.pgm");
  return s;
}

void write_corpus(const fs::path& out, const CorpusOptions& options) {
  if (options.scenes < 1) throw Error(ErrorCode::kInvalidArgument, "a corpus needs at least one scene");
  fs::create_directories(out / "timelines");
  fs::create_directories(out / "truth");
  fs::create_directories(out / "scenes");
  json ids = json::array();
  for (int i = 0; i < options.scenes; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%03d", i);
    const auto n = static_cast<std::uint64_t>(i);
    const MiningScene m = make_mining_scene(id, derive_seed({options.seed, n, fnv1a("mining")}),
                                            options.tool_clip_fraction);
    mining::save_timeline(out / "timelines" / (m.hand_clip.clip_id + ".json"), m.hand_clip);
    if (!m.tool_clip.clip_id.empty())
      mining::save_timeline(out / "timelines" / (m.tool_clip.clip_id + ".json"), m.tool_clip);
    std::ofstream(out / "truth" / (std::string(id) + ".json"), std::ios::trunc) << truth_to_json(m.truth).dump(2)
                                                                                << "\n";
    save_grasp_scene(out / "scenes" / id, make_grasp_scene(id, derive_seed({options.seed, n, fnv1a("grasp")})));
    ids.push_back(id);
  }
  const json doc = {{"scenes", ids}, {"seed", options.seed}, {"tool_clip_fraction", options.tool_clip_fraction}};
  std::ofstream(out / "corpus.json", std::ios::trunc) << doc.dump(2) << "\n";
}

}  // namespace affkit::world
