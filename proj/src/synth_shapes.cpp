#include "affkit/synth_shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>

#include "affkit/error.hpp"
#include "affkit/palette.hpp"
#include "affkit/random.hpp"

namespace affkit::synth {

namespace {

using palette::Rgb;

Rgb pick(Rng& rng, std::span<const Rgb> colors) { return colors[uniform_index(rng, colors.size())]; }

std::uint8_t jitter(Rng& rng, std::uint8_t v, int amount) {
  const int d = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(2 * amount + 1))) - amount;
  return static_cast<std::uint8_t>(std::clamp(v + d, 0, 255));
}

struct CellRect {
  int x0, y0, w, h;  // in cells
  bool overlaps(const CellRect& o) const {
    return x0 < o.x0 + o.w && o.x0 < x0 + w && y0 < o.y0 + o.h && o.y0 < y0 + h;
  }
};

}  // namespace

AffordanceSample make_shape_sample(const ShapesOptions& opt, std::uint64_t sample_seed) {
  return make_shape_cell(opt, sample_seed, ShapeKind::kRandom, -1);
}

AffordanceSample make_shape_cell(const ShapesOptions& opt, std::uint64_t sample_seed, ShapeKind kind,
                                 int table_index) {
  const int cells = opt.size / opt.cell;
  const int thick = 2, part = 3, cake = 4;
  if (opt.size % opt.cell != 0 || cells < 2 * part) throw Error(ErrorCode::kInvalidArgument, "crop too small for a tool");
  Rng rng(sample_seed);

  const Rgb drawn_table = pick(rng, palette::kTable);
  const Rgb table = table_index >= 0 ? palette::kTable[static_cast<std::size_t>(table_index) % std::size(palette::kTable)]
                                     : drawn_table;
  const Rgb handle_color = pick(rng, palette::kHandle);
  const bool drawn_spoon = uniform01(rng) < opt.spoon_fraction;
  if (kind == ShapeKind::kRandom) kind = drawn_spoon ? ShapeKind::kSpoon : ShapeKind::kKnife;
  const bool spoon = kind == ShapeKind::kSpoon;
  const Rgb head_color = spoon ? pick(rng, palette::kBowl) : pick(rng, palette::kBlade);
  const bool horizontal = uniform01(rng) < 0.5;
  const bool handle_first = uniform01(rng) < 0.5;
  const int along = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cells - 2 * part + 1)));
  const int across = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cells - thick + 1)));

  auto rect = [&](int a, int len) {
    return horizontal ? CellRect{a, across, len, thick} : CellRect{across, a, thick, len};
  };
  const CellRect first = rect(along, part), second = rect(along + part, part);
  const CellRect handle = handle_first ? first : second;
  const CellRect head = handle_first ? second : first;
  const int cake_at = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cells - cake + 1)));
  const CellRect cake_rect{cake_at, across * (cells - cake) / std::max(1, cells - thick), cake, cake};

  std::vector<CellRect> taken;
  if (kind == ShapeKind::kKnife || kind == ShapeKind::kSpoon) taken = {handle, head};
  if (kind == ShapeKind::kCake) taken = {cake_rect};
  std::vector<std::pair<CellRect, Rgb>> decoys;
  for (int d = 0; d < opt.decoys; ++d) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const bool h = uniform01(rng) < 0.5;
      const int w = h ? part : thick, ht = h ? thick : part;
      CellRect r{static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cells - w + 1))),
                 static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cells - ht + 1))), w, ht};
      if (std::any_of(taken.begin(), taken.end(), [&](const CellRect& t) { return t.overlaps(r); })) continue;
      const double u = uniform01(rng);
      const Rgb color = u < 0.4   ? pick(rng, palette::kHandle)
                        : u < 0.8 ? pick(rng, palette::kBlade)
                                  : pick(rng, palette::kBowl);
      decoys.emplace_back(r, color);
      taken.push_back(r);
      break;
    }
  }

  AffordanceSample s;
  s.image = RgbImage(opt.size, opt.size);
  s.depth = DepthMap(opt.size, opt.size);
  s.masks.emplace("grasp", geometry::BinaryMask(opt.size, opt.size));
  s.masks.emplace("cut", geometry::BinaryMask(opt.size, opt.size));
  s.object_category = kind == ShapeKind::kCake ? "cake" : kind == ShapeKind::kEmpty ? "" : spoon ? "spoon" : "knife";

  auto table_depth = [&](int y) { return 0.15 + 0.05 * y / opt.size; };
  for (int y = 0; y < opt.size; ++y)
    for (int x = 0; x < opt.size; ++x) {
      s.image.set_pixel(x, y, {jitter(rng, table[0], 6), jitter(rng, table[1], 6), jitter(rng, table[2], 6)});
      s.depth.at(x, y) = table_depth(y);
    }

  auto paint = [&](const CellRect& r, const Rgb& color, auto&& depth_fn, geometry::BinaryMask* mask) {
    for (int cy = r.y0 * opt.cell; cy < (r.y0 + r.h) * opt.cell; ++cy)
      for (int cx = r.x0 * opt.cell; cx < (r.x0 + r.w) * opt.cell; ++cx) {
        s.image.set_pixel(cx, cy, {jitter(rng, color[0], 8), jitter(rng, color[1], 8), jitter(rng, color[2], 8)});
        s.depth.at(cx, cy) = depth_fn(cx, cy);
        if (mask != nullptr) mask->set(cx, cy);
      }
  };
  const double thickness_px = thick * opt.cell;
  auto across_coord = [&](int x, int y) {
    const int a = horizontal ? y - across * opt.cell : x - across * opt.cell;
    return (a + 0.5) / thickness_px;
  };
  if (kind == ShapeKind::kKnife || kind == ShapeKind::kSpoon) {
    paint(handle, handle_color,
          [&](int x, int y) { return 0.7 + 0.2 * std::sin(std::numbers::pi * across_coord(x, y)); },
          &s.masks.at("grasp"));
    if (spoon)
      paint(head, head_color,
            [&](int x, int y) { return 0.6 - 0.1 * std::sin(std::numbers::pi * across_coord(x, y)); }, nullptr);
    else
      paint(head, head_color, [](int, int) { return 0.5; }, &s.masks.at("cut"));
  } else if (kind == ShapeKind::kCake) {
    paint(cake_rect, palette::kCake[0], [](int, int) { return 0.55; }, nullptr);
  }
  for (const auto& [r, color] : decoys) paint(r, color, [&](int, int y) { return table_depth(y) + 0.02; }, nullptr);
  return s;
}

std::vector<std::pair<std::string, AffordanceSample>> make_shapes_dataset(const ShapesOptions& opt) {
  std::vector<std::pair<std::string, AffordanceSample>> out;
  out.reserve(static_cast<std::size_t>(opt.count));
  for (int i = 0; i < opt.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "shape_%05d", i);
    out.emplace_back(id, make_shape_sample(opt, derive_seed({opt.seed, static_cast<std::uint64_t>(i)})));
  }
  return out;
}

}  // namespace affkit::synth
