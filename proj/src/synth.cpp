#include "tsad/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace tsad {

namespace {

class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    // Box-Muller; one draw per pair keeps the stream layout simple.
    const double u1 = unit_open();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }  // [0,1)
  double unit_open() {
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  }
  std::mt19937_64 rng_;
};

}  // namespace

std::vector<double> generate_series(const SynthSpec& spec) {
  if (spec.n < 8) throw InvalidConfigError("synthetic series needs n >= 8");
  if (spec.kind == SynthKind::kSine || spec.kind == SynthKind::kSpike) {
    if (!(spec.period > 0.0)) throw InvalidConfigError("period must be > 0");
  }
  if (spec.kind == SynthKind::kSpike && (spec.at < 0 || spec.at >= spec.n))
    throw InvalidConfigError("spike index outside series");
  if (spec.kind == SynthKind::kLevelShift) {
    if (spec.at < 0 || spec.at > spec.n) throw InvalidConfigError("shift index outside series");
    if (spec.ramp < 0) throw InvalidConfigError("ramp must be >= 0");
  }
  if (!(spec.noise >= 0.0)) throw InvalidConfigError("noise must be >= 0");

  GaussianSource gauss(spec.seed);
  std::vector<double> out(static_cast<std::size_t>(spec.n));

  for (long i = 0; i < spec.n; ++i) {
    double v = 0.0;
    switch (spec.kind) {
      case SynthKind::kConstant:
        v = spec.value;
        break;
      case SynthKind::kSine:
      case SynthKind::kSpike:
        v = spec.offset +
            spec.amplitude *
                std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / spec.period);
        break;
      case SynthKind::kLevelShift: {
        if (i < spec.at) {
          v = spec.from;
        } else if (spec.ramp > 0 && i < spec.at + spec.ramp) {
          const double frac = static_cast<double>(i - spec.at + 1) / static_cast<double>(spec.ramp);
          v = spec.from + (spec.to - spec.from) * frac;
        } else {
          v = spec.to;
        }
        break;
      }
    }
    if (spec.kind != SynthKind::kConstant && spec.noise > 0.0) v += spec.noise * gauss.next();
    if (spec.kind == SynthKind::kSpike && i == spec.at) v += spec.magnitude;
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

}  // namespace tsad
