#pragma once

// Procedural two-part tool crops for learnability and ablation runs.
//
// Each crop holds one raised tool and a few flat decoys painted with the same
// palettes at table height. A knife contributes its handle ("grasp") and blade
// ("cut"); a spoon only its handle, the bowl being background. Decoys are
// background too, so colour alone does not separate them from real parts
// while the depth map does.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "affkit/dataset.hpp"

namespace affkit::synth {

struct ShapesOptions {
  int count = 200;
  int size = 64;
  int cell = 8;  // parts and decoys snap to this grid
  int decoys = 2;
  double spoon_fraction = 0.25;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string> kShapeLabels = {"grasp", "cut"};

enum class ShapeKind { kRandom, kKnife, kSpoon, kCake, kEmpty };

AffordanceSample make_shape_sample(const ShapesOptions& options, std::uint64_t sample_seed);
// Same renderer with the object kind forced and, when table_index >= 0, a
// fixed table colour. Cakes and empty cells carry empty masks.
AffordanceSample make_shape_cell(const ShapesOptions& options, std::uint64_t sample_seed, ShapeKind kind,
                                 int table_index);
std::vector<std::pair<std::string, AffordanceSample>> make_shapes_dataset(const ShapesOptions& options);

}  // namespace affkit::synth
