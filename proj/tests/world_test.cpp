#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "affkit/palette.hpp"
#include "affkit/random.hpp"
#include "affkit/world.hpp"

namespace {

namespace fs = std::filesystem;
namespace w = affkit::world;
using affkit::geometry::Box;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool inside(const Box& inner, const Box& outer) {
  return inner.x_min >= outer.x_min && inner.y_min >= outer.y_min && inner.x_max <= outer.x_max &&
         inner.y_max <= outer.y_max;
}

TEST(MiningScene, DeterministicAndConsistent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = w::make_mining_scene("m", seed);
    const auto b = w::make_mining_scene("m", seed);
    EXPECT_EQ(a.hand_clip.frames, b.hand_clip.frames);
    EXPECT_EQ(a.truth.camera_offsets, b.truth.camera_offsets);
    const auto& t = a.hand_clip;
    EXPECT_NO_THROW(t.validate());
    EXPECT_EQ(a.truth.has_tool_clip, !a.tool_clip.clip_id.empty());
    EXPECT_EQ(t.paired_clip, a.tool_clip.clip_id);
    ASSERT_EQ(a.truth.camera_offsets.size(), t.frames.size());
    for (int f = 0; f < static_cast<int>(t.frames.size()); ++f) {
      // The planted grasp point lies on the handle in every frame.
      const auto g = a.truth.expected_grasp(f);
      EXPECT_TRUE(a.truth.handle_in_frame(f).contains(g));
      const auto c = t.frames[static_cast<std::size_t>(f)].pixel(static_cast<int>(g.x), static_cast<int>(g.y));
      const auto cls = affkit::palette::classify(c);
      EXPECT_TRUE(cls == affkit::palette::ColorClass::kHandle || cls == affkit::palette::ColorClass::kSkin);
      // Blade pixels carry the blade colour class.
      const Box bl = a.truth.blade_in_frame(f);
      const auto bc = t.frames[static_cast<std::size_t>(f)].pixel(static_cast<int>(bl.center().x),
                                                                  static_cast<int>(bl.center().y));
      EXPECT_EQ(affkit::palette::classify(bc), affkit::palette::ColorClass::kBlade);
    }
  }
}

TEST(MiningTruth, JsonRoundTrip) {
  const auto s = w::make_mining_scene("t", 3);
  const auto back = w::truth_from_json(w::truth_to_json(s.truth));
  EXPECT_EQ(back.scene_id, s.truth.scene_id);
  EXPECT_EQ(back.camera_offsets, s.truth.camera_offsets);
  EXPECT_EQ(back.grasp_world, s.truth.grasp_world);
  EXPECT_EQ(back.handle_world, s.truth.handle_world);
  EXPECT_EQ(back.blade_world, s.truth.blade_world);
  EXPECT_EQ(back.has_tool_clip, s.truth.has_tool_clip);
}

TEST(GraspScene, PlantedObjects) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = w::make_grasp_scene("g", seed);
    const Box frame(0, 0, s.image.width(), s.image.height());
    int targets = 0, knives = 0, spoons = 0;
    ASSERT_GE(s.capable, 0);
    EXPECT_EQ(s.objects[static_cast<std::size_t>(s.capable)].category, "knife");
    for (const auto& o : s.objects) {
      EXPECT_TRUE(inside(o.box, frame));
      targets += o.target;
      knives += o.category == "knife";
      spoons += o.category == "spoon";
      if (o.target) EXPECT_EQ(o.category, s.target);
      if (o.category == "knife") {
        EXPECT_TRUE(inside(o.grasp_part, o.box));
        EXPECT_TRUE(inside(o.function_part, o.box));
        const double ix = std::max(0.0, std::min(o.grasp_part.x_max, o.function_part.x_max) -
                                            std::max(o.grasp_part.x_min, o.function_part.x_min));
        const double iy = std::max(0.0, std::min(o.grasp_part.y_max, o.function_part.y_max) -
                                            std::max(o.grasp_part.y_min, o.function_part.y_min));
        EXPECT_EQ(ix * iy, 0.0);
      }
    }
    EXPECT_EQ(targets, 1);
    EXPECT_EQ(knives, 1);
    EXPECT_GE(spoons, 1);
    EXPECT_LE(spoons, 2);
    EXPECT_EQ(s.objects.size(), static_cast<std::size_t>(2 + spoons));
  }
}

TEST(GraspScene, SaveLoadRoundTrip) {
  const auto s = w::make_grasp_scene("rt", 4);
  const fs::path dir = fs::temp_directory_path() / "affkit_grasp_scene";
  fs::remove_all(dir);
  w::save_grasp_scene(dir, s);
  const auto back = w::load_grasp_scene(dir);
  EXPECT_EQ(back.image, s.image);
  EXPECT_EQ(back.capable, s.capable);
  ASSERT_EQ(back.objects.size(), s.objects.size());
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    EXPECT_EQ(back.objects[i].box, s.objects[i].box);
    EXPECT_EQ(back.objects[i].function_part, s.objects[i].function_part);
  }
  for (int y = 0; y < s.depth.height(); ++y)
    for (int x = 0; x < s.depth.width(); ++x) EXPECT_NEAR(back.depth.at(x, y), s.depth.at(x, y), 0.5 / 255 + 1e-12);
  fs::remove_all(dir);
}

TEST(Corpus, ByteIdenticalAcrossRuns) {
  const fs::path a = fs::temp_directory_path() / "affkit_corpus_a";
  const fs::path b = fs::temp_directory_path() / "affkit_corpus_b";
  fs::remove_all(a);
  fs::remove_all(b);
  w::write_corpus(a, {4, 7, 0.5});
  w::write_corpus(b, {4, 7, 0.5});
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
  }
  EXPECT_GT(files, 4 * 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // namespace
