// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. Optional arguments select a subset
// of criteria by number, e.g. `acceptance 1 5 6`.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "affkit/error.hpp"
#include "affkit/geometry.hpp"
#include "affkit/graspsel.hpp"
#include "affkit/losses.hpp"
#include "affkit/metrics.hpp"
#include "affkit/mining.hpp"
#include "affkit/stub_perception.hpp"
#include "affkit/synth_shapes.hpp"
#include "affkit/trainer.hpp"
#include "affkit/world.hpp"
#include "model_fixtures.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
namespace g = affkit::geometry;
namespace gs = affkit::graspsel;
namespace tr = affkit::trainer;
using affkit::Rng;
using nlohmann::json;
using namespace affkit::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::current_path() / "acceptance_work";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

bool mask_has(const g::BinaryMask& m, const g::Point2& p) {
  const int x = static_cast<int>(std::lround(p.x)), y = static_cast<int>(std::lround(p.y));
  return x >= 0 && y >= 0 && x < m.width() && y < m.height() && m.get(x, y);
}

// ---------------------------------------------------------------- 1

Outcome geometry_oracles() {
  Rng rng(101);
  double dlt_worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d h = random_homography(rng);
    const auto src = random_points(rng, 4 + static_cast<std::size_t>(trial % 30), 0, 256);
    g::PointSet dst;
    for (const auto& p : src) dst.push_back(apply(h, p));
    const auto est = g::estimate_homography_dlt(src, dst);
    for (std::size_t i = 0; i < src.size(); ++i)
      dlt_worst = std::max(dlt_worst, g::distance(g::project_point(est, src[i]), dst[i]));
  }

  // 40 correspondences, 12 of them planted outliers at least 10 px off.
  int ransac_ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(1000 + seed);
    const Eigen::Matrix3d h = random_homography(r);
    const auto src = random_points(r, 40, 0, 256);
    g::PointSet dst;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const g::Point2 truth = apply(h, src[i]);
      if (i < 28) {
        dst.push_back(truth);
        continue;
      }
      g::Point2 q;
      do q = {affkit::uniform(r, -20, 280), affkit::uniform(r, -20, 280)};
      while (g::distance(q, truth) < 10);
      dst.push_back(q);
    }
    try {
      const auto res = g::estimate_homography_ransac(src, dst, {.threshold = 2.0, .max_iters = 1000, .seed = seed});
      double worst = 0;
      for (std::size_t i = 0; i < 28; ++i) worst = std::max(worst, g::distance(g::project_point(res.model, src[i]), dst[i]));
      ransac_ok += worst < 1.0;
    } catch (const affkit::Error&) {
    }
  }

  int far_ok = 0, near_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int side = 2 + static_cast<int>(affkit::uniform_index(rng, 63));
    auto grid_points = [&](std::size_t n) {
      g::PointSet pts;
      for (std::size_t i = 0; i < n; ++i)
        pts.push_back({static_cast<double>(affkit::uniform_index(rng, static_cast<std::uint64_t>(side))),
                       static_cast<double>(affkit::uniform_index(rng, static_cast<std::uint64_t>(side)))});
      return pts;
    };
    const auto ref = grid_points(1 + affkit::uniform_index(rng, 40));
    const auto cand = grid_points(1 + affkit::uniform_index(rng, 200));
    far_ok += g::farthest_point(ref, cand) == brute_farthest(ref, cand);

    const int w = 1 + static_cast<int>(affkit::uniform_index(rng, 64)), hh = 1 + static_cast<int>(affkit::uniform_index(rng, 64));
    auto a = random_mask(rng, w, hh, 0.05 + 0.3 * affkit::uniform01(rng));
    auto b = random_mask(rng, w, hh, 0.05 + 0.3 * affkit::uniform01(rng));
    if (a.empty()) a.set(0, 0);
    if (b.empty()) b.set(w - 1, hh - 1);
    near_ok += g::nearest_point_between_masks(a, b) == brute_nearest(a, b);
  }
  return {dlt_worst <= 1e-6 && ransac_ok >= 95 && far_ok == 200 && near_ok == 200,
          fmt("DLT max reprojection %.2e px; RANSAC %d/100 seeds; farthest %d/200; nearest %d/200", dlt_worst,
              ransac_ok, far_ok, near_ok)};
}

// ---------------------------------------------------------------- 2

Outcome mining_end_to_end() {
  const fs::path corpus = work_dir() / "corpus";
  affkit::world::write_corpus(corpus, {50, 7, 0.8});
  const auto timelines = affkit::mining::load_timelines(corpus / "timelines");
  const affkit::mining::StubPerception stub;
  const affkit::mining::MiningConfig cfg;
  const auto result = affkit::mining::mine(timelines, stub, cfg, affkit::mining::AffordanceCatalog::kitchen());
  int grasp_ok = 0, func_ok = 0, masks_ok = 0;
  for (const auto& s : result.samples) {
    std::ifstream in(corpus / "truth" / (s.id.substr(0, 9) + ".json"));
    const auto truth = affkit::world::truth_from_json(json::parse(in));
    const auto e = truth.expected_grasp(s.grasp_frame);
    grasp_ok += std::hypot(e.x - s.grasp_point.x, e.y - s.grasp_point.y) <= 2.0;
    func_ok += truth.blade_in_frame(s.grasp_frame)
                   .covers_pixel(static_cast<int>(std::lround(s.functional_point.x)),
                                 static_cast<int>(std::lround(s.functional_point.y)));
    bool ok = s.sample.masks.size() >= 2;
    for (auto a = s.sample.masks.begin(); a != s.sample.masks.end(); ++a) {
      ok = ok && !a->second.empty();
      for (auto b = std::next(a); b != s.sample.masks.end(); ++b) ok = ok && (a->second & b->second).empty();
    }
    masks_ok += ok;
  }
  const int n = static_cast<int>(result.samples.size());
  return {grasp_ok >= 48 && func_ok >= 48 && masks_ok == n && n > 0,
          fmt("%d samples, %zu failures; grasp within 2 px %d/50; functional inside part %d/50; masks disjoint and "
              "non-empty %d/%d",
              n, result.failures.size(), grasp_ok, func_ok, masks_ok, n)};
}

// ---------------------------------------------------------------- 3

Outcome identity_at_init() {
  auto c = m::ModelConfig::toy();
  const m::SegmentationModel full(c);
  c.dfi = m::DfiMode::kOff;
  c.lora_rank = 0;
  const m::SegmentationModel frozen(c);
  Rng rng(303);
  int equal = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = random_image(rng, c.input_size);
    const auto depth = random_depth(rng, c.input_size);
    const auto a = full.segment(img, &depth);
    const auto b = frozen.segment(img, nullptr);
    equal += a.scores == b.scores && a.labels == b.labels;
  }
  return {equal == 10, fmt("bitwise equal outputs on %d/10 random inputs", equal)};
}

// ---------------------------------------------------------------- 4

Outcome gradient_checks() {
  m::SegmentationModel model(tiny_config());
  Rng rng(404);
  perturb_gates(model, rng);
  const auto img = random_image(rng, 16);
  const auto depth = random_depth(rng, 16);
  Matrix target = Matrix::Zero(256, 2);
  for (Eigen::Index i = 0; i < 256; ++i) {
    const auto l = affkit::uniform_index(rng, 3);
    if (l < 2) target(i, static_cast<Eigen::Index>(l)) = 1.0;
  }
  const auto r = check_model_gradients(model, img, depth, target);
  std::map<std::string, double> groups;
  auto group_of = [](const std::string& n) -> std::string {
    if (n.ends_with(".beta")) return "beta";
    if (n.starts_with("dfi.")) return "dfi";
    if (n.starts_with("lora.")) return "lora";
    if (n.starts_with("head.")) return "embedder";
    if (n.starts_with("classifier.")) return "classifier";
    return "stem";
  };
  for (const auto& [name, err] : r.per_tensor) groups[group_of(name)] = std::max(groups[group_of(name)], err);
  std::string detail = fmt("%zu tensors, worst %.2e (%s);", r.per_tensor.size(), r.worst, r.worst_name.c_str());
  for (const auto& [k, v] : groups) detail += fmt(" %s %.1e", k.c_str(), v);
  return {r.worst < 1e-4 && groups.size() == 6, detail};
}

// ---------------------------------------------------------------- 5

Outcome loss_correctness() {
  Rng rng(505);
  affkit::LossConfig cfg;
  cfg.gamma = 0.0;
  double ce_worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix y(40, 3), t(40, 3);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y.data()[i] = affkit::uniform(rng, 1e-4, 1 - 1e-4);
      t.data()[i] = affkit::uniform01(rng) < 0.4 ? 1.0 : 0.0;
    }
    ce_worst = std::max(ce_worst, std::abs(affkit::focal_loss(y, t, cfg) - bce_oracle(y, t)));
  }
  const affkit::LossConfig def;
  const double dice = affkit::dice_loss(Matrix::Zero(4, 1), Matrix::Ones(4, 1), def);
  Matrix t(64, 2);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = affkit::uniform01(rng) < 0.5 ? 1.0 : 0.0;
  const double focal_perfect = affkit::focal_loss(t, t, def);
  const double dice_perfect = affkit::dice_loss(t, t, def);
  return {ce_worst <= 1e-9 && dice == 1.0 - 1.0 / 5.0 && focal_perfect <= affkit::kProbabilityClamp * (1 + 1e-7) &&
              dice_perfect <= 1e-12,
          fmt("gamma=0 vs cross-entropy max diff %.1e; dice hand case %.17g; perfect focal %.2e, dice %.1e", ce_worst,
              dice, focal_perfect, dice_perfect)};
}

// ---------------------------------------------------------------- 6

Outcome metrics_correctness() {
  Rng rng(606);
  int exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int labels = 1 + static_cast<int>(affkit::uniform_index(rng, 4));
    const auto gt = random_labels(rng, 16, 16, labels);
    const auto pred = random_labels(rng, 16, 16, labels);
    const auto o = brute_metrics(pred, gt, labels);
    const auto mm = affkit::compute_metrics(pred, gt, labels);
    exact += !o.empty && mm.miou == o.miou && mm.f1 == o.f1 && mm.acc == o.acc;
  }
  affkit::LabelMap gt(20, 10), pred(20, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) gt.at(x, y) = 0;
    for (int x = 5; x < 15; ++x) pred.at(x, y) = 0;
  }
  const auto hand = affkit::compute_metrics(pred, gt, 1);
  return {exact == 200 && hand.miou == 1.0 / 3.0 && hand.f1 == 0.5 && hand.acc == 0.5,
          fmt("oracle agreement %d/200; hand case IoU %.6f F1 %.3f Acc %.3f", exact, hand.miou, hand.f1, hand.acc)};
}

// ---------------------------------------------------------------- 7, 8

struct ToyRun {
  tr::TrainResult result;
  double train_miou = 0;
  double held_miou = 0;
  double seconds = 0;
};

const affkit::DatasetHandle& shapes(const std::string& name, int count, std::uint64_t seed) {
  static std::map<std::string, affkit::DatasetHandle> cache;
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  affkit::synth::ShapesOptions so;
  so.count = count;
  so.seed = seed;
  const fs::path dir = work_dir() / name;
  affkit::write_dataset(dir, affkit::synth::kShapeLabels, affkit::synth::make_shapes_dataset(so));
  return cache.emplace(name, affkit::load_dataset(dir)).first->second;
}

const affkit::DatasetHandle& train_set() { return shapes("shapes_train", 200, 1); }
const affkit::DatasetHandle& held_set() { return shapes("shapes_held", 100, 2); }

const ToyRun& toy_run(m::DfiMode mode) {
  static std::map<m::DfiMode, ToyRun> runs;
  if (auto it = runs.find(mode); it != runs.end()) return it->second;
  auto cfg = tr::TrainConfig::toy();
  cfg.epochs = 30;
  cfg.model.dfi = mode;
  ToyRun run;
  const auto t0 = std::chrono::steady_clock::now();
  run.result = tr::train(train_set(), cfg, work_dir() / (std::string("toy_") + m::to_string(mode)));
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.train_miou = tr::evaluate(train_set(), run.result.final_checkpoint).mean.miou;
  run.held_miou = tr::evaluate(held_set(), run.result.final_checkpoint).mean.miou;
  return runs.emplace(mode, run).first->second;
}

// Loss threshold measured by the pilot run: with the default logit scale and
// threshold the per-pixel probability saturates near 0.88, so the combined
// loss levels off above 0.1.
constexpr double kFinalLossThreshold = 0.15;

Outcome toy_learnability() {
  const auto& run = toy_run(m::DfiMode::kTrainAndInfer);
  const auto& ep = run.result.epochs;
  bool monotone = ep.size() >= 5;
  for (std::size_t i = 1; monotone && i < 5; ++i) monotone = ep[i].loss <= ep[i - 1].loss * 1.05;
  std::string curve;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ep.size()); ++i) curve += fmt("%s%.3f", i ? " " : "", ep[i].loss);
  const double final_loss = ep.empty() ? 1e9 : ep.back().loss;
  return {ep.size() == 30 && run.train_miou >= 0.9 && monotone && run.seconds < 600 && final_loss < kFinalLossThreshold,
          fmt("train mIoU %.4f; first losses [%s]; final loss %.4f (< %.2f); %.0f s", run.train_miou, curve.c_str(),
              final_loss, kFinalLossThreshold, run.seconds)};
}

Outcome ablation_direction() {
  const auto& on = toy_run(m::DfiMode::kTrainAndInfer);
  const auto& off = toy_run(m::DfiMode::kOff);

  // A short train_only run, then inference with depth withheld.
  auto cfg = tr::TrainConfig::toy();
  cfg.model.dfi = m::DfiMode::kTrainOnly;
  cfg.epochs = 2;
  const auto small = shapes("shapes_small", 24, 3);
  const auto res = tr::train(small, cfg, work_dir() / "toy_train_only");
  const auto model = m::SegmentationModel::load(res.final_checkpoint);
  int depthless = 0;
  for (std::size_t i = 0; i < held_set().size(); ++i) {
    const auto s = tr::eval_view(affkit::load_sample(held_set(), i), model.config().input_size);
    try {
      const auto a = model.segment(s.image, nullptr);
      const auto b = model.segment(s.image, &s.depth);
      depthless += a.scores == b.scores;
    } catch (const affkit::Error&) {
    }
  }
  const int n = static_cast<int>(held_set().size());
  return {on.held_miou >= off.held_miou && depthless == n,
          fmt("held-out mIoU DFI on %.4f vs off %.4f (train %.4f vs %.4f); train_only inference without depth %d/%d",
              on.held_miou, off.held_miou, on.train_miou, off.train_miou, depthless, n)};
}

// ---------------------------------------------------------------- 9

Outcome tau_monotonicity() {
  const auto model = m::SegmentationModel::load(toy_run(m::DfiMode::kTrainAndInfer).result.final_checkpoint);
  const int size = model.config().input_size;
  Rng rng(909);
  int nested = 0;
  std::string counts;
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = random_image(rng, size);
    const auto depth = random_depth(rng, size);
    std::optional<affkit::LabelMap> prev;
    bool ok = true;
    for (double tau : {0.0, 0.4, 0.8, 0.95}) {
      const auto cur = model.segment(img, &depth, tau).labels;
      if (prev)
        for (std::size_t i = 0; i < cur.labels.size(); ++i)
          ok = ok && (cur.labels[i] == affkit::kBackground || prev->labels[i] != affkit::kBackground);
      if (trial == 0)
        counts += fmt("%s%ld", prev ? "/" : "",
                      static_cast<long>(std::count_if(cur.labels.begin(), cur.labels.end(),
                                                      [](int v) { return v != affkit::kBackground; })));
      prev = cur;
    }
    nested += ok;
  }
  const double def = m::ModelConfig{}.tau;
  return {nested == 10 && def == 0.8,
          fmt("nested on %d/10 inputs (first input foreground %s px); default tau %.2f", nested, counts.c_str(), def)};
}

// ---------------------------------------------------------------- 10

Outcome grasp_orchestration() {
  const auto model = m::SegmentationModel::load(toy_run(m::DfiMode::kTrainAndInfer).result.final_checkpoint);
  const fs::path scenes = work_dir() / "corpus" / "scenes";
  if (!fs::exists(scenes)) affkit::world::write_corpus(work_dir() / "corpus", {50, 7, 0.8});
  const gs::MockGraspProvider provider;
  int total = 0, selected = 0, planned = 0, inside = 0, dual = 0, disjoint = 0, on_part = 0;
  std::map<std::string, int> errors;
  for (const auto& entry : fs::directory_iterator(scenes)) {
    const auto scene = affkit::world::load_grasp_scene(entry.path());
    std::vector<affkit::mining::Detection> dets;
    for (const auto& o : scene.objects) dets.push_back({o.box, o.category});
    const gs::MockSceneDetector detector(dets);
    ++total;
    std::optional<gs::PlanRecord> use, hand;
    for (auto mode : {gs::TaskMode::kUseTool, gs::TaskMode::kHandover}) {
      try {
        auto plan = gs::run_task(scene.image, scene.depth, gs::parse_task(scene.verb + " " + scene.target, mode),
                                 model, {&detector, &provider});
        ++planned;
        const auto& mask = mode == gs::TaskMode::kUseTool ? plan.grasp_mask : plan.functional_mask;
        inside += mask_has(mask, plan.grasp.contact_pixel);
        (mode == gs::TaskMode::kUseTool ? use : hand) = std::move(plan);
      } catch (const affkit::Error& e) {
        ++errors[e.stage() + ":" + affkit::to_string(e.code())];
      }
    }
    if (use) {
      selected += static_cast<int>(use->selected) == scene.capable;
      const auto& part = scene.objects[use->selected].grasp_part;
      on_part += part.covers_pixel(static_cast<int>(std::lround(use->grasp.contact_pixel.x)),
                                   static_cast<int>(std::lround(use->grasp.contact_pixel.y)));
    }
    if (use && hand) {
      ++dual;
      disjoint += (use->grasp_mask & hand->functional_mask).empty() &&
                  !mask_has(hand->functional_mask, use->grasp.contact_pixel) &&
                  !mask_has(use->grasp_mask, hand->grasp.contact_pixel);
    }
  }
  std::string err;
  for (const auto& [k, v] : errors) err += fmt(" %s x%d", k.c_str(), v);
  return {total == 50 && selected * 100 >= 95 * total && inside == planned && planned > 0 && disjoint == dual &&
              dual > 0,
          fmt("capable object selected %d/%d; contact inside mode mask %d/%d; dual-mode disjoint %d/%d; use_tool "
              "contact on planted handle %d/%d;%s",
              selected, total, inside, planned, disjoint, dual, on_part, total, err.empty() ? " no errors" : err.c_str())};
}

// ---------------------------------------------------------------- 11

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// The training log records wall-clock time per epoch; everything else in it
// must match.
std::string without_wall_time(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line, out;
  while (std::getline(in, line)) {
    auto j = json::parse(line);
    j.erase("wall_time_s");
    out += j.dump() + "\n";
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AFFKIT_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome determinism() {
  std::vector<std::string> failures;
  int compared = 0;
  std::array<fs::path, 2> roots{work_dir() / "det_a", work_dir() / "det_b"};
  for (const auto& r : roots) {
    const std::string d = r.string();
    const std::vector<std::string> steps = {
        "synth --scenes 6 --seed 3 --out " + d + "/corpus",
        "mine --timelines " + d + "/corpus --seed 3 --out " + d + "/mined",
        "synth --shapes 32 --seed 3 --out " + d + "/shapes",
        "train --data " + d + "/shapes --epochs 2 --seed 3 --out " + d + "/run",
        "train --data " + d + "/mined --epochs 1 --seed 3 --out " + d + "/run_mined",
    };
    for (const auto& s : steps)
      if (run_cli(s) != 0) failures.push_back("exit status: " + s.substr(0, s.find(' ')));
  }
  for (const auto& e : fs::recursive_directory_iterator(roots[0])) {
    const fs::path rel = e.path().lexically_relative(roots[0]);
    const fs::path other = roots[1] / rel;
    if (e.is_symlink()) {
      if (!fs::is_symlink(other) || fs::read_symlink(other) != fs::read_symlink(e.path()))
        failures.push_back(rel.string());
      ++compared;
      continue;
    }
    if (!e.is_regular_file()) continue;
    ++compared;
    const bool same = rel.filename() == "train_log.jsonl"
                          ? without_wall_time(slurp(e.path())) == without_wall_time(slurp(other))
                          : fs::exists(other) && slurp(e.path()) == slurp(other);
    if (!same) failures.push_back(rel.string());
  }
  std::string detail = fmt("%d artifacts compared across two runs of synth, mine and train", compared);
  if (!failures.empty()) detail += "; differing:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty() && compared > 20, detail};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double budget_s;  // wall-clock limit; infinity when none applies
  };
  constexpr double kNone = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> criteria = {
      {"geometry oracles", geometry_oracles, 60},
      {"mining end-to-end", mining_end_to_end, 120},
      {"identity at initialization", identity_at_init, kNone},
      {"gradient checks", gradient_checks, 60},
      {"loss correctness", loss_correctness, kNone},
      {"metrics correctness", metrics_correctness, kNone},
      {"toy learnability", toy_learnability, 600},
      {"depth fusion ablation direction", ablation_direction, kNone},
      {"threshold monotonicity", tau_monotonicity, kNone},
      {"grasp orchestration", grasp_orchestration, kNone},
      {"determinism", determinism, kNone},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > criteria[i].budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", criteria[i].budget_s);
    }
    failed += !o.pass;
    std::printf("%s  %2d %-32s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
