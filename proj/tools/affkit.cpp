// affkit: single entry point for corpus synthesis, mining, training,
// evaluation, inference and grasp planning.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "affkit/dataset.hpp"
#include "affkit/error.hpp"
#include "affkit/graspsel.hpp"
#include "affkit/image.hpp"
#include "affkit/mining.hpp"
#include "affkit/model.hpp"
#include "affkit/stub_perception.hpp"
#include "affkit/synth_shapes.hpp"
#include "affkit/trainer.hpp"
#include "affkit/world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace affkit;

namespace {

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

// Accepts a checkpoint file, the same path without ".afk", or a training
// output directory (its best checkpoint).
fs::path resolve_checkpoint(const fs::path& p) {
  if (fs::is_regular_file(p)) return p;
  if (fs::path with = fs::path(p.string() + ".afk"); fs::is_regular_file(with)) return with;
  for (const auto& candidate : {p / "checkpoints" / "best.afk", p / "best.afk"})
    if (fs::is_regular_file(candidate)) return candidate;
  throw Error(ErrorCode::kIoError, "no checkpoint at " + p.string());
}

const CLI::Validator kCheckpoint(
    [](std::string& s) {
      try {
        resolve_checkpoint(s);
        return std::string();
      } catch (const Error& e) {
        return std::string(e.what());
      }
    },
    "CHECKPOINT");

constexpr std::array<std::array<std::uint8_t, 3>, 6> kLabelTints = {{
    {128, 0, 160}, {0, 200, 0}, {0, 120, 255}, {255, 140, 0}, {0, 200, 200}, {220, 0, 0}}};

RgbImage label_overlay(const RgbImage& image, const LabelMap& labels, int num_labels) {
  RgbImage out = image;
  for (int l = 0; l < num_labels; ++l) {
    geometry::BinaryMask m(labels.width, labels.height);
    for (int y = 0; y < labels.height; ++y)
      for (int x = 0; x < labels.width; ++x)
        if (labels.at(x, y) == l) m.set(x, y);
    paint_overlay(out, m, kLabelTints[static_cast<std::size_t>(l) % kLabelTints.size()], 0.5);
  }
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  fs::path out;
};

void add_common(CLI::App* app, Common& c, bool out_required = true) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  auto* out = app->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affordance mining, training and task-oriented grasp planning"};
  app.require_subcommand(1);

  // synth
  Common synth_c;
  int scenes = 50;
  std::optional<int> shapes;
  double tool_fraction = 0.8;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic scene corpus or a shapes dataset");
  add_common(synth, synth_c);
  auto* scenes_opt = synth->add_option("--scenes", scenes, "Number of mining and grasp scenes")
                         ->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--shapes", shapes, "Write a shapes dataset with this many samples instead")
      ->check(CLI::PositiveNumber)->excludes(scenes_opt);
  synth->add_option("--tool-clip-fraction", tool_fraction, "Share of scenes with a paired tool clip")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();

  // mine
  Common mine_c;
  fs::path timelines;
  mining::MiningConfig mine_cfg;
  auto* mine = app.add_subcommand("mine", "Mine affordance samples from interaction timelines");
  add_common(mine, mine_c);
  mine->add_option("--timelines", timelines, "Timeline directory, or a corpus directory containing timelines/")
      ->required()->check(CLI::ExistingDirectory);
  mine->add_option("--contact-points", mine_cfg.n_contact_points)->check(CLI::PositiveNumber)->capture_default_str();
  mine->add_option("--iou-threshold", mine_cfg.iou_threshold)->capture_default_str();
  mine->add_option("--erosion", mine_cfg.erosion_radius)->check(CLI::NonNegativeNumber)->capture_default_str();
  mine->add_flag("!--average-after-projection", mine_cfg.average_before_projection,
                 "Project every contact point and average afterwards");

  // train
  Common train_c;
  fs::path train_data, train_config;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::string> dfi;
  auto* train = app.add_subcommand("train", "Train the segmentation model");
  add_common(train, train_c);
  train->add_option("--data", train_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--config", train_config, "INI config file")->check(CLI::ExistingFile);
  train->add_option("--epochs", epochs)->check(CLI::NonNegativeNumber);
  train->add_option("--learning-rate", lr)->check(CLI::NonNegativeNumber);
  train->add_option("--dfi", dfi, "train_and_infer, train_only or off")
      ->check(CLI::IsMember({"train_and_infer", "train_only", "off"}));

  // eval
  Common eval_c;
  fs::path eval_data, eval_ck;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_common(eval, eval_c, false);
  eval->add_option("--data", eval_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--checkpoint", eval_ck)->required()->check(kCheckpoint);

  // infer
  Common infer_c;
  fs::path infer_ck, infer_data;
  std::vector<fs::path> infer_images, infer_depths;
  std::optional<double> infer_tau;
  auto* infer = app.add_subcommand("infer", "Write per-label score maps and overlays");
  add_common(infer, infer_c);
  infer->add_option("--checkpoint", infer_ck)->required()->check(kCheckpoint);
  auto* images_opt = infer->add_option("--image", infer_images, "Input PPM (repeatable)")->check(CLI::ExistingFile);
  infer->add_option("--depth", infer_depths, "Depth PGM per image")->check(CLI::ExistingFile)->needs(images_opt);
  infer->add_option("--data", infer_data, "Run on every dataset sample instead")
      ->check(CLI::ExistingDirectory)->excludes(images_opt);
  infer->add_option("--tau", infer_tau)->check(CLI::Range(0.0, 1.0));

  // grasp
  Common grasp_c;
  fs::path grasp_image, grasp_depth, grasp_ck, grasp_scene;
  std::string task_text;
  bool handover = false;
  auto* grasp = app.add_subcommand("grasp", "Select a tool for a task and plan a grasp on it");
  add_common(grasp, grasp_c);
  grasp->add_option("--image", grasp_image)->required()->check(CLI::ExistingFile);
  grasp->add_option("--depth", grasp_depth)->required()->check(CLI::ExistingFile);
  grasp->add_option("--task", task_text, "\"<verb> <target>\"")->required();
  grasp->add_flag("--handover", handover, "Grasp the functional part to hand the tool over");
  grasp->add_option("--checkpoint", grasp_ck)->required()->check(kCheckpoint);
  grasp->add_option("--scene", grasp_scene, "Detections for the mock detector (default: scene.json beside the image)")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) {
      if (shapes) {
        synth::ShapesOptions opt;
        opt.count = *shapes;
        opt.seed = synth_c.seed;
        write_dataset(synth_c.out, synth::kShapeLabels, synth::make_shapes_dataset(opt));
        std::cout << "wrote " << *shapes << " shape samples to " << synth_c.out.string() << "\n";
      } else {
        world::write_corpus(synth_c.out, {scenes, synth_c.seed, tool_fraction});
        std::cout << "wrote " << scenes << " scenes to " << synth_c.out.string() << "\n";
      }
    } else if (*mine) {
      if (fs::is_directory(timelines / "timelines")) timelines /= "timelines";
      mine_cfg.seed = mine_c.seed;
      mine_cfg.ransac.seed = mine_c.seed;
      mine_cfg.validate();
      const auto catalog = mining::AffordanceCatalog::kitchen();
      const mining::StubPerception clients;
      const auto result = mining::mine(mining::load_timelines(timelines), clients, mine_cfg, catalog);
      mining::write_mining_output(mine_c.out, result, mine_cfg, catalog);
      std::cout << "mined " << result.samples.size() << " samples, " << result.failures.size() << " failures, "
                << result.skipped << " skipped\n";
    } else if (*train) {
      auto cfg = train_config.empty() ? trainer::TrainConfig::toy() : trainer::load_config(train_config);
      if (train->count("--seed") > 0) {
        cfg.seed = train_c.seed;
        cfg.model.seed = train_c.seed;
      }
      if (epochs) cfg.epochs = *epochs;
      if (lr) cfg.learning_rate = *lr;
      if (dfi) cfg.model.dfi = model::parse_dfi_mode(*dfi);
      cfg.validate();
      const auto result = trainer::train(load_dataset(train_data), cfg, train_c.out, [](const trainer::EpochRecord& r) {
        std::printf("epoch %d loss %.4f train_miou %.4f\n", r.epoch, r.loss, r.train_miou);
        std::fflush(stdout);
      });
      std::cout << "final " << result.final_checkpoint.string() << "\nbest " << result.best_checkpoint.string() << "\n";
    } else if (*eval) {
      const fs::path ck = resolve_checkpoint(eval_ck);
      const auto report = trainer::evaluate(load_dataset(eval_data), ck);
      // Default: the run directory when one was given, else beside the checkpoint.
      const fs::path out = !eval_c.out.empty()             ? fs::path(eval_c.out)
                           : fs::is_directory(eval_ck) ? fs::path(eval_ck)
                                                       : ck.parent_path();
      fs::create_directories(out);
      write_json(out / "eval_report.json", trainer::report_to_json(report));
      std::printf("mIoU %.4f F1 %.4f Acc %.4f over %d images -> %s\n", report.mean.miou, report.mean.f1,
                  report.mean.acc, report.images, (out / "eval_report.json").c_str());
    } else if (*infer) {
      if (infer_images.empty() && infer_data.empty())
        throw CLI::RequiredError("--image or --data");
      if (!infer_depths.empty() && infer_depths.size() != infer_images.size())
        throw CLI::ValidationError("--depth", "give one depth map per image");
      const auto model = model::SegmentationModel::load(resolve_checkpoint(infer_ck));
      const auto& cfg = model.config();
      std::vector<std::tuple<std::string, RgbImage, std::optional<DepthMap>>> inputs;
      if (!infer_data.empty()) {
        const auto ds = load_dataset(infer_data);
        for (std::size_t i = 0; i < ds.size(); ++i) {
          auto s = load_sample(ds, i);
          inputs.emplace_back(ds.records[i].id, std::move(s.image), std::move(s.depth));
        }
      } else {
        for (std::size_t i = 0; i < infer_images.size(); ++i)
          inputs.emplace_back(infer_images[i].stem().string(), read_ppm(infer_images[i]),
                              infer_depths.empty() ? std::nullopt : std::optional(read_depth_pgm(infer_depths[i])));
      }
      for (auto& [id, image, depth] : inputs) {
        const int w = image.width(), h = image.height();
        const RgbImage in = resize_bilinear(image, cfg.input_size, cfg.input_size);
        std::optional<DepthMap> din;
        if (depth) din = resize_bilinear(*depth, cfg.input_size, cfg.input_size);
        const auto seg = model.segment(in, din ? &*din : nullptr, infer_tau);
        const fs::path dir = infer_c.out / id;
        fs::create_directories(dir);
        for (int l = 0; l < cfg.num_labels(); ++l) {
          DepthMap score(seg.width, seg.height);
          for (int y = 0; y < seg.height; ++y)
            for (int x = 0; x < seg.width; ++x) score.at(x, y) = seg.scores(y * seg.width + x, l);
          write_pgm(dir / ("score_" + cfg.labels[static_cast<std::size_t>(l)] + ".pgm"), resize_bilinear(score, w, h));
        }
        write_ppm(dir / "overlay.ppm", resize_bilinear(label_overlay(in, seg.labels, cfg.num_labels()), w, h));
      }
      std::cout << "wrote " << inputs.size() << " predictions to " << infer_c.out.string() << "\n";
    } else if (*grasp) {
      const auto task = graspsel::parse_task(task_text, handover ? graspsel::TaskMode::kHandover
                                                                 : graspsel::TaskMode::kUseTool);
      if (grasp_scene.empty()) grasp_scene = grasp_image.parent_path() / "scene.json";
      std::ifstream in(grasp_scene);
      if (!in) throw Error(ErrorCode::kIoError, "no detections file at " + grasp_scene.string());
      std::vector<mining::Detection> detections;
      try {
        const json doc = json::parse(in);
        for (const auto& o : doc.at("objects")) {
          const auto b = o.at("box");
          detections.push_back({{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                 b.at(3).get<double>()},
                                o.at("category").get<std::string>()});
        }
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kFormatError, grasp_scene.string() + ": " + e.what());
      }
      const auto image = read_ppm(grasp_image);
      const auto depth = read_depth_pgm(grasp_depth);
      const auto model = model::SegmentationModel::load(resolve_checkpoint(grasp_ck));
      const graspsel::MockSceneDetector detector(std::move(detections));
      const graspsel::MockGraspProvider provider;
      const auto plan = graspsel::run_task(image, depth, task, model, {&detector, &provider});
      graspsel::write_plan(grasp_c.out, plan, image);
      const auto& box = plan.objects[plan.selected].box;
      std::printf("selected %s [%g %g %g %g], grasp at (%.1f, %.1f) score %.3f\n",
                  plan.objects[plan.selected].category.c_str(), box.x_min, box.y_min, box.x_max, box.y_max,
                  plan.grasp.contact_pixel.x, plan.grasp.contact_pixel.y, plan.grasp.score);
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
