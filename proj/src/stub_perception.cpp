#include "affkit/stub_perception.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>

#include "affkit/error.hpp"
#include "affkit/palette.hpp"

namespace affkit::mining {

using palette::ColorClass;

namespace {

std::vector<ColorClass> class_map(const RgbImage& frame) {
  std::vector<ColorClass> out(static_cast<std::size_t>(frame.width()) * frame.height());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      out[static_cast<std::size_t>(y) * frame.width() + x] = palette::classify(frame.pixel(x, y));
  return out;
}

// Running pixel-covering box.
struct BoxAccumulator {
  int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
  std::size_t count = 0;
  void add(int x, int y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x + 1);
    y1 = std::max(y1, y + 1);
    ++count;
  }
  std::optional<Box> box() const {
    if (count == 0) return std::nullopt;
    return Box(x0, y0, x1, y1);
  }
};

bool boxes_overlap(const Box& a, const Box& b) {
  return std::min(a.x_max, b.x_max) > std::max(a.x_min, b.x_min) &&
         std::min(a.y_max, b.y_max) > std::max(a.y_min, b.y_min);
}

// 4-connected flood fill over pixels accepted by `same`.
template <typename Pred>
void flood(int w, int h, int sx, int sy, BinaryMask& out, Pred same) {
  std::deque<std::pair<int, int>> queue{{sx, sy}};
  out.set(sx, sy);
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    constexpr std::array<std::pair<int, int>, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (const auto& [dx, dy] : kSteps) {
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || out.get(nx, ny) || !same(nx, ny)) continue;
      out.set(nx, ny);
      queue.emplace_back(nx, ny);
    }
  }
}

}  // namespace

ContactState StubPerception::detect_hand_object(const RgbImage& frame) const {
  const auto classes = class_map(frame);
  BoxAccumulator hand, tool, food;
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x) {
      const ColorClass c = classes[static_cast<std::size_t>(y) * frame.width() + x];
      if (c == ColorClass::kSkin) hand.add(x, y);
      if (palette::is_tool_part(c)) tool.add(x, y);
      if (palette::is_food(c)) food.add(x, y);
    }
  ContactState s;
  s.hand_box = hand.box();
  if (food.count > 0) {
    s.object_box = food.box();
    s.tool_box = tool.box();
    s.in_contact = s.tool_box && geometry::box_iou(*s.tool_box, *s.object_box) > 0.0;
  } else {
    s.object_box = tool.box();
    s.in_contact = s.hand_box && s.object_box && boxes_overlap(*s.hand_box, *s.object_box);
  }
  return s;
}

BinaryMask StubPerception::segment_points(const RgbImage& frame, const PointSet& positive, const PointSet&) const {
  const int w = frame.width(), h = frame.height();
  BinaryMask out(w, h);
  for (const auto& p : positive) {
    const int sx = static_cast<int>(std::lround(p.x)), sy = static_cast<int>(std::lround(p.y));
    if (sx < 0 || sy < 0 || sx >= w || sy >= h || out.get(sx, sy)) continue;
    const ColorClass seed = palette::classify(frame.pixel(sx, sy));
    BinaryMask region(w, h);
    flood(w, h, sx, sy, region, [&](int x, int y) { return palette::classify(frame.pixel(x, y)) == seed; });
    out = out | region;
  }
  return out;
}

std::vector<Detection> StubPerception::detect_open_vocabulary(const RgbImage& frame,
                                                              const std::vector<std::string>& vocabulary) const {
  const int w = frame.width(), h = frame.height();
  const auto classes = class_map(frame);
  auto cls = [&](int x, int y) { return classes[static_cast<std::size_t>(y) * w + x]; };
  const bool everything = vocabulary.empty() || (vocabulary.size() == 1 && vocabulary[0] == "objects");
  BinaryMask seen(w, h);
  std::vector<Detection> out;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const ColorClass c = cls(x, y);
      if (seen.get(x, y) || !(palette::is_tool_part(c) || palette::is_food(c))) continue;
      BinaryMask comp(w, h);
      if (palette::is_tool_part(c))
        flood(w, h, x, y, comp, [&](int px, int py) { return palette::is_tool_part(cls(px, py)); });
      else
        flood(w, h, x, y, comp, [&](int px, int py) { return cls(px, py) == c; });
      seen = seen | comp;
      if (comp.count() < 16) continue;
      bool blade = false, bowl = false;
      for (const auto& p : comp.pixels()) {
        blade |= cls(static_cast<int>(p.x), static_cast<int>(p.y)) == ColorClass::kBlade;
        bowl |= cls(static_cast<int>(p.x), static_cast<int>(p.y)) == ColorClass::kBowl;
      }
      std::string category = c == ColorClass::kBread  ? "bread"
                             : c == ColorClass::kCake ? "cake"
                             : blade                  ? "knife"
                             : bowl                   ? "spoon"
                                                      : "utensil";
      if (!everything && std::find(vocabulary.begin(), vocabulary.end(), category) == vocabulary.end()) continue;
      out.push_back({comp.bounding_box(), category});
    }
  return out;
}

Point2 StubPerception::map_correspondence(const RgbImage&, const Box& box_a, const Point2& p, const RgbImage&,
                                          const Box& box_b) const {
  if (!(box_a.width() > 0.0 && box_a.height() > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "source box is degenerate");
  const double u = (p.x - box_a.x_min) / box_a.width(), v = (p.y - box_a.y_min) / box_a.height();
  return {box_b.x_min + u * box_b.width(), box_b.y_min + v * box_b.height()};
}

DepthMap StubPerception::estimate_depth(const RgbImage& frame) const {
  DepthMap d(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x) {
      switch (palette::classify(frame.pixel(x, y))) {
        case ColorClass::kHandle: d.at(x, y) = 0.8; break;
        case ColorClass::kBlade:
        case ColorClass::kBowl: d.at(x, y) = 0.6; break;
        case ColorClass::kSkin: d.at(x, y) = 0.9; break;
        case ColorClass::kBread:
        case ColorClass::kCake: d.at(x, y) = 0.5; break;
        case ColorClass::kOther: d.at(x, y) = 0.3; break;
        default: d.at(x, y) = 0.2; break;
      }
    }
  return d;
}

std::pair<PointSet, PointSet> StubPerception::match(const RgbImage& a, const RgbImage& b) const {
  auto centroids = [](const RgbImage& img) {
    std::map<int, std::array<double, 3>> acc;  // id -> sum x, sum y, count
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (const auto id = palette::marker_id(img.pixel(x, y))) {
          auto& s = acc[*id];
          s[0] += x;
          s[1] += y;
          s[2] += 1.0;
        }
    std::map<int, Point2> out;
    for (const auto& [id, s] : acc) out[id] = {s[0] / s[2], s[1] / s[2]};
    return out;
  };
  const auto ca = centroids(a), cb = centroids(b);
  std::vector<int> ids;
  for (const auto& [id, p] : ca)
    if (cb.count(id)) ids.push_back(id);
  PointSet src, dst;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    src.push_back(ca.at(ids[i]));
    const int partner = (ids[i] % 4 == 3 && ids.size() > 1) ? ids[(i + 1) % ids.size()] : ids[i];
    dst.push_back(cb.at(partner));
  }
  return {src, dst};
}

}  // namespace affkit::mining
