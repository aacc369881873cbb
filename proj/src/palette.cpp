#include "affkit/palette.hpp"

#include <algorithm>
#include <cstdlib>

namespace affkit::palette {

Rgb marker_color(int id) { return {250, static_cast<std::uint8_t>(10 + 15 * id), 250}; }

std::optional<int> marker_id(const Rgb& c) {
  if (c[0] != 250 || c[2] != 250 || c[1] < 10 || (c[1] - 10) % 15 != 0) return std::nullopt;
  const int id = (c[1] - 10) / 15;
  if (id >= kMarkerCount) return std::nullopt;
  return id;
}

std::span<const Rgb> entries(ColorClass c) {
  switch (c) {
    case ColorClass::kTable: return kTable;
    case ColorClass::kHandle: return kHandle;
    case ColorClass::kBlade: return kBlade;
    case ColorClass::kBowl: return kBowl;
    case ColorClass::kSkin: return kSkin;
    case ColorClass::kBread: return kBread;
    case ColorClass::kCake: return kCake;
    default: return {};
  }
}

ColorClass classify(const Rgb& c) {
  if (marker_id(c)) return ColorClass::kMarker;
  constexpr ColorClass kClasses[] = {ColorClass::kTable, ColorClass::kHandle, ColorClass::kBlade, ColorClass::kBowl,
                                     ColorClass::kSkin,  ColorClass::kBread,  ColorClass::kCake};
  ColorClass best = ColorClass::kOther;
  int best_d = 25;
  for (const auto cls : kClasses)
    for (const auto& e : entries(cls)) {
      const int d = std::max({std::abs(c[0] - e[0]), std::abs(c[1] - e[1]), std::abs(c[2] - e[2])});
      if (d < best_d) {
        best_d = d;
        best = cls;
      }
    }
  return best;
}

}  // namespace affkit::palette
