#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "affkit/dataset.hpp"
#include "affkit/error.hpp"
#include "affkit/image.hpp"
#include "affkit/random.hpp"
#include "affkit/synth_shapes.hpp"
#include "affkit/trainer.hpp"

namespace {

namespace fs = std::filesystem;
namespace tr = affkit::trainer;
using affkit::AffordanceSample;
using affkit::ErrorCode;
using affkit::geometry::BinaryMask;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const affkit::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("affkit_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path shapes_dataset(const TempDir& dir, int count, std::uint64_t seed = 1) {
  affkit::synth::ShapesOptions o;
  o.count = count;
  o.seed = seed;
  const fs::path root = dir.path() / "data";
  affkit::write_dataset(root, affkit::synth::kShapeLabels, affkit::synth::make_shapes_dataset(o));
  return root;
}

tr::TrainConfig quick_config() {
  auto c = tr::TrainConfig::toy();
  c.batch_size = 4;
  c.epochs = 1;
  c.seed = 3;
  return c;
}

// ------------------------------------------------------ dataset loading

TEST(LoadDataset, CountsRecords) {
  TempDir dir("ds_count");
  const auto h = affkit::load_dataset(shapes_dataset(dir, 10));
  EXPECT_EQ(h.size(), 10u);
  EXPECT_EQ(h.labels, affkit::synth::kShapeLabels);
}

TEST(LoadDataset, MaskSizeMismatchNamesTheRecord) {
  TempDir dir("ds_mask");
  const auto root = shapes_dataset(dir, 5);
  const auto h = affkit::load_dataset(root);
  affkit::write_mask_pgm(root / h.records[3].masks.at("grasp"), BinaryMask(10, 10));
  try {
    affkit::load_dataset(root);
    FAIL() << "no error";
  } catch (const affkit::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kManifestError);
    EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, MissingDepthFile) {
  TempDir dir("ds_depth");
  const auto root = shapes_dataset(dir, 5);
  fs::remove(root / affkit::load_dataset(root).records[1].depth);
  EXPECT_EQ(code_of([&] { affkit::load_dataset(root); }), ErrorCode::kManifestError);
}

// ------------------------------------------------------ augmentation

AffordanceSample indicator_sample(int size, std::uint64_t seed) {
  affkit::Rng rng(seed);
  AffordanceSample s;
  s.image = affkit::RgbImage(size, size);
  s.depth = affkit::DepthMap(size, size);
  BinaryMask g(size, size), c(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const auto r = affkit::uniform_index(rng, 3);
      if (r == 1) g.set(x, y);
      if (r == 2) c.set(x, y);
      s.depth.at(x, y) = static_cast<double>(r) / 2.0;
      s.image.set_pixel(x, y, {static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y), static_cast<std::uint8_t>(r)});
    }
  s.masks = {{"grasp", g}, {"cut", c}};
  return s;
}

TEST(Augment, DeterministicGivenSeed) {
  auto cfg = tr::TrainConfig::toy();
  cfg.resize = 72;
  const auto s = indicator_sample(72, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = tr::augment(s, cfg, seed), b = tr::augment(s, cfg, seed);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.depth, b.depth);
    EXPECT_EQ(a.masks, b.masks);
  }
}

TEST(Augment, ImageDepthAndMasksMoveTogether) {
  auto cfg = tr::TrainConfig::toy();
  cfg.resize = 72;  // crops at offsets 0..8 from a same-size resize
  const auto s = indicator_sample(72, 2);
  std::set<std::pair<int, int>> origins;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto a = tr::augment(s, cfg, seed);
    ASSERT_EQ(a.image.width(), 64);
    ASSERT_EQ(a.depth.width(), 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const int r = a.image.pixel(x, y)[2];
        EXPECT_EQ(a.masks.at("grasp").get(x, y), r == 1);
        EXPECT_EQ(a.masks.at("cut").get(x, y), r == 2);
        EXPECT_DOUBLE_EQ(a.depth.at(x, y), r / 2.0);
      }
    origins.insert({a.image.pixel(0, 0)[0], a.image.pixel(0, 0)[1]});
  }
  EXPECT_GT(origins.size(), 4u);  // crops and flips actually vary
}

TEST(Augment, HorizontalFlipMapsColumns) {
  auto cfg = tr::TrainConfig::toy();
  cfg.flip_vertical = false;
  const auto s = indicator_sample(64, 3);
  int flipped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = tr::augment(s, cfg, seed);
    if (a.image == s.image) continue;
    ++flipped;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) EXPECT_EQ(a.masks.at("grasp").get(x, y), s.masks.at("grasp").get(63 - x, y));
  }
  EXPECT_GT(flipped, 0);
  EXPECT_LT(flipped, 20);
}

TEST(Augment, FlipIsAnInvolution) {
  const auto s = indicator_sample(17, 4);
  EXPECT_EQ(affkit::flip_horizontal(affkit::flip_horizontal(s.image)), s.image);
  EXPECT_EQ(affkit::flip_vertical(affkit::flip_vertical(s.depth)), s.depth);
  const auto& m = s.masks.at("cut");
  EXPECT_EQ(affkit::flip_horizontal(affkit::flip_horizontal(m)), m);
}

// ------------------------------------------------------ config

TEST(TrainConfig, Validation) {
  auto c = tr::TrainConfig::toy();
  EXPECT_NO_THROW(c.validate());
  c.crop = 80;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = tr::TrainConfig::toy();
  c.batch_size = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(TrainConfig, FullScaleDefaults) {
  const tr::TrainConfig c;
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_EQ(c.epochs, 15);
  EXPECT_EQ(c.resize, 476);
  EXPECT_EQ(c.crop, 448);
  EXPECT_TRUE(c.flip_horizontal);
  EXPECT_TRUE(c.flip_vertical);
}

TEST(LoadConfig, IniSections) {
  TempDir dir("cfg");
  std::ofstream(dir.path() / "a.ini") << "[train]\nlearning_rate = 0.005\nepochs = 3\nflip_vertical = false\n"
                                         "[model]\ndfi = off\ntau = 0.5\n[loss]\ngamma = 0\n";
  const auto c = tr::load_config(dir.path() / "a.ini");
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.005);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_FALSE(c.flip_vertical);
  EXPECT_TRUE(c.flip_horizontal);
  EXPECT_EQ(c.model.dfi, affkit::model::DfiMode::kOff);
  EXPECT_DOUBLE_EQ(c.model.tau, 0.5);
  EXPECT_DOUBLE_EQ(c.loss.gamma, 0.0);
  EXPECT_EQ(c.crop, 64);  // untouched keys keep the toy preset

  std::ofstream(dir.path() / "b.ini") << "[train]\nlearning_rat = 0.1\n";
  EXPECT_EQ(code_of([&] { tr::load_config(dir.path() / "b.ini"); }), ErrorCode::kInvalidArgument);
  std::ofstream(dir.path() / "c.ini") << "[train]\nepochs = many\n";
  EXPECT_EQ(code_of([&] { tr::load_config(dir.path() / "c.ini"); }), ErrorCode::kFormatError);
}

// ------------------------------------------------------ training

TEST(Train, ZeroEpochsWritesTheInitialization) {
  TempDir dir("train0");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 4));
  auto cfg = quick_config();
  cfg.epochs = 0;
  const auto r = tr::train(ds, cfg, dir.path() / "run");
  EXPECT_TRUE(r.epochs.empty());
  const auto saved = affkit::model::SegmentationModel::load(r.final_checkpoint);
  const auto init = tr::initial_model(ds, cfg);
  EXPECT_EQ(saved.to_archive(), init.to_archive());
  EXPECT_TRUE(fs::exists(r.best_checkpoint));
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  TempDir dir("train_lr0");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 4));
  auto cfg = quick_config();
  cfg.learning_rate = 0.0;
  const auto r = tr::train(ds, cfg, dir.path() / "run");
  ASSERT_EQ(r.epochs.size(), 1u);
  EXPECT_EQ(affkit::model::SegmentationModel::load(r.final_checkpoint).to_archive(),
            tr::initial_model(ds, cfg).to_archive());
}

TEST(Train, BackboneStaysFrozenWhileAdaptersMove) {
  TempDir dir("train_frozen");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 4));
  const auto cfg = quick_config();
  const auto r = tr::train(ds, cfg, dir.path() / "run");
  const auto init = tr::initial_model(ds, cfg);
  const auto trained = affkit::model::SegmentationModel::load(r.final_checkpoint);
  EXPECT_EQ(trained.backbone_digest(), init.backbone_digest());
  int moved = 0;
  for (const auto& [name, p] : trained.parameters()) {
    const auto& p0 = init.parameter(name);
    if (!p.trainable) {
      EXPECT_EQ(p.value, p0.value) << name;
      EXPECT_EQ(name.rfind("backbone.", 0), 0u) << name;
    } else if (p.value != p0.value) {
      ++moved;
    }
  }
  EXPECT_GT(moved, 0);
  for (const char* prefix : {"dfi.", "classifier.", "head.", "lora.", "stem."}) {
    bool found = false;
    for (const auto& name : trained.trainable_names()) found = found || name.rfind(prefix, 0) == 0;
    EXPECT_TRUE(found) << prefix;
  }
}

TEST(Train, RunsAreByteIdentical) {
  TempDir dir("train_det");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 6));
  auto cfg = quick_config();
  cfg.epochs = 2;
  const auto a = tr::train(ds, cfg, dir.path() / "a");
  const auto b = tr::train(ds, cfg, dir.path() / "b");
  EXPECT_EQ(slurp(dir.path() / "a" / "loss_curve.json"), slurp(dir.path() / "b" / "loss_curve.json"));
  EXPECT_EQ(slurp(a.final_checkpoint), slurp(b.final_checkpoint));
  ASSERT_EQ(a.epochs.size(), 2u);
  EXPECT_EQ(a.epochs[1].loss, b.epochs[1].loss);

  // One JSON record per epoch with wall time and learning rate.
  std::ifstream log(dir.path() / "a" / "train_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("epoch").get<int>(), ++lines);
    EXPECT_TRUE(j.contains("wall_time_s"));
    EXPECT_TRUE(j.contains("lr"));
    EXPECT_TRUE(j.contains("loss"));
  }
  EXPECT_EQ(lines, 2);
}

TEST(Train, DivergenceRaisesNonFiniteLoss) {
  TempDir dir("train_nan");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 4));
  auto cfg = quick_config();
  cfg.learning_rate = 1e300;
  cfg.batch_size = 2;
  cfg.epochs = 3;
  EXPECT_EQ(code_of([&] { tr::train(ds, cfg, dir.path() / "run"); }), ErrorCode::kNonFiniteLoss);
}

// ------------------------------------------------------ evaluation

TEST(Evaluate, UntrainedReportIsWellFormed) {
  TempDir dir("eval");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 6));
  const auto model = tr::initial_model(ds, quick_config());
  const auto r = tr::evaluate(ds, model);
  EXPECT_GT(r.images, 0);
  EXPECT_EQ(r.images + r.skipped, 6);
  for (const double v : {r.mean.miou, r.mean.f1, r.mean.acc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const auto j = tr::report_to_json(r);
  EXPECT_TRUE(j.contains("miou"));
  EXPECT_TRUE(j.contains("labels"));
  EXPECT_EQ(j.at("images").get<int>(), r.images);
}

TEST(Evaluate, VocabularyMismatch) {
  TempDir dir("eval_vocab");
  const auto ds = affkit::load_dataset(shapes_dataset(dir, 2));
  auto cfg = quick_config();
  cfg.model.labels = {"grasp", "cut", "scoop"};
  const affkit::model::SegmentationModel model(cfg.model);
  EXPECT_EQ(code_of([&] { tr::evaluate(ds, model); }), ErrorCode::kVocabularyMismatch);
}

// ------------------------------------------------------ shapes dataset

TEST(ShapesDataset, PartsAreDisjointAndDeterministic) {
  affkit::synth::ShapesOptions o;
  o.count = 60;
  o.seed = 9;
  const auto a = affkit::synth::make_shapes_dataset(o);
  const auto b = affkit::synth::make_shapes_dataset(o);
  ASSERT_EQ(a.size(), 60u);
  std::map<std::string, int> kinds;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& s = a[i].second;
    EXPECT_EQ(s.image, b[i].second.image);
    EXPECT_NO_THROW(affkit::validate_sample(s));
    ++kinds[s.object_category];
    const auto& g = s.masks.at("grasp");
    const auto& c = s.masks.at("cut");
    EXPECT_TRUE((g & c).empty());
    if (s.object_category == "knife") {
      EXPECT_FALSE(g.empty());
      EXPECT_FALSE(c.empty());
    } else if (s.object_category == "spoon") {
      EXPECT_FALSE(g.empty());
      EXPECT_TRUE(c.empty());
    }
    for (double d : s.depth.data()) {
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0);
    }
  }
  EXPECT_GT(kinds["knife"], 0);
  EXPECT_GT(kinds["spoon"], 0);
}

}  // namespace
