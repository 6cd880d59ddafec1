// Times the serial and task-parallel engine paths on the same synthetic
// stream and verifies that their outputs match field for field.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "tsad/detector.hpp"
#include "tsad/synth.hpp"

namespace {

using tsad::Engine;
using tsad::EngineConfig;
using tsad::ExecPolicy;
using tsad::StepResult;

bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b;
}

bool same_verdict(const tsad::StepVerdict& a, const tsad::StepVerdict& b) {
  return a.t == b.t && a.value == b.value && a.predicted == b.predicted && a.aare == b.aare &&
         a.aare_checked == b.aare_checked && a.threshold == b.threshold &&
         a.is_abnormal == b.is_abnormal && a.retrained == b.retrained &&
         a.epochs_used == b.epochs_used;
}

// Everything but elapsed_ms, which is wall time.
bool same_payload(const StepResult& a, const StepResult& b) {
  if (a.t != b.t || a.value != b.value || a.phase != b.phase) return false;
  if (!same_optional(a.predicted, b.predicted) || !same_optional(a.aare, b.aare)) return false;
  if (a.record.has_value() != b.record.has_value()) return false;
  if (!a.record) return true;
  const auto& ra = *a.record;
  const auto& rb = *b.record;
  if (ra.anomaly != rb.anomaly || !same_verdict(ra.detector1, rb.detector1)) return false;
  if (ra.detector2.has_value() != rb.detector2.has_value()) return false;
  return !ra.detector2 || same_verdict(*ra.detector2, *rb.detector2);
}

struct RunOutcome {
  std::vector<StepResult> results;
  double seconds = 0.0;
};

RunOutcome run(const EngineConfig& cfg, const std::vector<double>& values) {
  Engine engine(cfg);
  RunOutcome out;
  out.results.reserve(values.size());
  const auto start = std::chrono::steady_clock::now();
  for (double v : values) out.results.push_back(engine.step(v));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  long n = 4000;
  std::uint64_t seed = 1;
  int lookback = 3;
  int repeats = 3;

  CLI::App app{"serial vs parallel engine comparison"};
  app.add_option("--n", n, "stream length");
  app.add_option("--seed", seed, "stream and engine seed");
  app.add_option("-b,--lookback", lookback, "look-back window size");
  app.add_option("--repeats", repeats, "timed repetitions per path");
  CLI11_PARSE(app, argc, argv);

  tsad::SynthSpec spec;
  spec.kind = tsad::SynthKind::kSine;
  spec.n = n;
  spec.seed = seed;
  spec.offset = 50.0;
  spec.amplitude = 10.0;
  spec.period = 288.0;
  spec.noise = 0.5;
  const std::vector<double> values = tsad::generate_series(spec);

  EngineConfig cfg;
  cfg.lookback = lookback;
  cfg.seed = seed;

  cfg.exec = ExecPolicy::kSerial;
  RunOutcome serial = run(cfg, values);
  cfg.exec = ExecPolicy::kParallel;
  RunOutcome parallel = run(cfg, values);

  bool identical = serial.results.size() == parallel.results.size();
  for (std::size_t i = 0; identical && i < serial.results.size(); ++i)
    identical = same_payload(serial.results[i], parallel.results[i]);
  if (!identical) {
    std::cerr << "FAIL: serial and parallel payloads differ\n";
    return 1;
  }

  double best_serial = serial.seconds;
  double best_parallel = parallel.seconds;
  for (int r = 1; r < repeats; ++r) {
    cfg.exec = ExecPolicy::kSerial;
    best_serial = std::min(best_serial, run(cfg, values).seconds);
    cfg.exec = ExecPolicy::kParallel;
    best_parallel = std::min(best_parallel, run(cfg, values).seconds);
  }

  long anomalies = 0;
  for (const auto& r : serial.results)
    if (r.record && r.record->anomaly) ++anomalies;

  std::printf("stream: n=%ld  anomalies=%ld\n", n, anomalies);
  std::printf("serial:   %.3f s  (%.3f ms/step)\n", best_serial,
              1e3 * best_serial / static_cast<double>(n));
  std::printf("parallel: %.3f s  (%.3f ms/step)\n", best_parallel,
              1e3 * best_parallel / static_cast<double>(n));
  std::printf("speedup:  %.2fx\n", best_serial / best_parallel);
  std::printf("payloads identical: yes\n");
  return 0;
}
