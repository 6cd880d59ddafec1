#pragma once

#include <cstdint>
#include <vector>

#include "tsad/common.hpp"

namespace tsad {

enum class SynthKind { kConstant, kSine, kLevelShift, kSpike };

// Deterministic synthetic streams for tests and benchmarks. Noise uses a
// fixed Box-Muller transform over splitmix-derived uniforms, so output is
// identical across platforms for a given seed.
struct SynthSpec {
  SynthKind kind = SynthKind::kSine;
  long n = 300;
  std::uint64_t seed = 1;

  double value = 10.0;  // constant

  double amplitude = 1.0;  // sine / spike base
  double period = 50.0;
  double offset = 0.0;
  double noise = 0.0;  // gaussian sigma added to every kind except constant

  long at = 0;             // spike index / shift start
  double magnitude = 10.0; // added at the spike index

  double from = 10.0;  // level shift
  double to = 12.0;
  long ramp = 0;  // steps over which the shift is linearly applied
};

std::vector<double> generate_series(const SynthSpec& spec);

}  // namespace tsad
