#pragma once

// Colour vocabulary shared by the synthetic generators and the stub
// perception clients. Entries of different classes are at least 20 apart in
// every-channel (L-infinity) distance, so pixels jittered by up to 8 levels
// classify unambiguously.

#include <array>
#include <cstdint>
#include <optional>
#include <span>

namespace affkit::palette {

using Rgb = std::array<std::uint8_t, 3>;

enum class ColorClass { kTable, kHandle, kBlade, kBowl, kSkin, kBread, kCake, kMarker, kOther };

inline constexpr Rgb kHandle[] = {{90, 50, 25}, {30, 30, 35}, {160, 30, 30}, {40, 60, 150}};
inline constexpr Rgb kBlade[] = {{190, 190, 200}, {140, 140, 150}, {220, 215, 200}, {120, 160, 170}};
inline constexpr Rgb kBowl[] = {{230, 140, 40}, {60, 150, 70}, {235, 225, 90}};
inline constexpr Rgb kTable[] = {{200, 170, 120}, {100, 120, 90}, {170, 160, 150}};
inline constexpr Rgb kSkin[] = {{225, 180, 150}};
inline constexpr Rgb kBread[] = {{180, 120, 60}};
inline constexpr Rgb kCake[] = {{130, 70, 100}};

// Feature markers carry a unique id in the green channel and are never
// jittered.
inline constexpr int kMarkerCount = 16;
Rgb marker_color(int id);
std::optional<int> marker_id(const Rgb& c);

std::span<const Rgb> entries(ColorClass c);

// Nearest palette class within L-infinity distance 24, kMarker for marker
// colours, kOther otherwise.
ColorClass classify(const Rgb& c);

inline bool is_tool_part(ColorClass c) {
  return c == ColorClass::kHandle || c == ColorClass::kBlade || c == ColorClass::kBowl;
}
inline bool is_food(ColorClass c) { return c == ColorClass::kBread || c == ColorClass::kCake; }

}  // namespace affkit::palette
