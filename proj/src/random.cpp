#include "affkit/random.hpp"

#include <cmath>
#include <numbers>

namespace affkit {

double normal(Rng& rng) {
  // Box-Muller; one draw per call keeps the stream position easy to reason about.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace affkit
