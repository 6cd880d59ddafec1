// Acceptance gate: one pass/fail line per criterion. Everything is checked
// against independent recomputations (brute-force formulas, finite
// differences, synthetic ground truth), not against the engine's own output.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "conformance.hpp"
#include "tsad/detector.hpp"
#include "tsad/eval.hpp"
#include "tsad/ingest.hpp"
#include "tsad/lstm.hpp"
#include "tsad/synth.hpp"
#include "tsad/trace.hpp"

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
  if (!pass) ++g_failures;
}

std::vector<double> noisy_sine(long n, std::uint64_t seed, double noise = 0.5) {
  tsad::SynthSpec spec;
  spec.kind = tsad::SynthKind::kSine;
  spec.n = n;
  spec.seed = seed;
  spec.offset = 50.0;
  spec.amplitude = 10.0;
  spec.period = 288.0;
  spec.noise = noise;
  return tsad::generate_series(spec);
}

tsad::EngineConfig base_config(std::uint64_t seed) {
  tsad::EngineConfig cfg;
  cfg.seed = seed;
  return cfg;
}

std::set<long> anomaly_steps(const std::vector<tsad::StepResult>& results) {
  std::set<long> out;
  for (const auto& r : results) {
    if (r.record && r.record->anomaly) out.insert(r.t);
  }
  return out;
}

// --- criterion 1: AARE oracle -----------------------------------------------

void criterion_1() {
  const auto run = conformance::run_engine(base_config(11), noisy_sine(1000, 11));
  const auto rep = conformance::check_run(run);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "every logged AARE matches the brute-force recomputation on a "
                "1000-point stream (max |delta| = %.3g)",
                rep.max_aare_delta);
  report(1, rep.max_aare_delta <= 1e-12, buf);
}

// --- criterion 2: threshold oracle -------------------------------------------

void criterion_2() {
  auto cfg = base_config(3);
  tsad::SynthSpec spec;
  spec.kind = tsad::SynthKind::kSine;
  spec.n = 500;
  spec.seed = 3;
  spec.offset = 50.0;
  spec.amplitude = 10.0;
  spec.period = 60.0;
  spec.noise = 0.4;
  const auto run = conformance::run_engine(cfg, tsad::generate_series(spec));
  const auto rep = conformance::check_run(run);

  bool flags_ok = true;
  for (const auto& res : run.results) {
    if (!res.record || !res.record->detector2) continue;
    if (run.engine.detector2()->considered_normal(res.t) != !res.record->detector2->is_abnormal)
      flags_ok = false;
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "thresholds match mu + k*sigma over the policy's included set on a "
                "500-point stream (max |delta| = %.3g); detector 2 includes only "
                "normal-flagged points",
                rep.max_threshold_delta);
  report(2, rep.max_threshold_delta <= 1e-12 && flags_ok, buf);
}

// --- criterion 3: gradient check ---------------------------------------------

double read_param(const tsad::LstmParams& p, std::size_t index) {
  double out = 0.0;
  std::size_t i = 0;
  p.for_each([&](double v) {
    if (i++ == index) out = v;
  });
  return out;
}

void bump_param(tsad::LstmParams& p, std::size_t index, double delta) {
  std::size_t i = 0;
  p.for_each([&](double& v) {
    if (i++ == index) v += delta;
  });
}

void criterion_3() {
  std::mt19937_64 rng(991);
  auto unit = [&rng] { return (rng() >> 11) * 0x1.0p-53; };

  int bad = 0;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int hidden = 2 + static_cast<int>(rng() % 2);
    const int steps = 3 + static_cast<int>(rng() % 3);
    tsad::LstmModel model = tsad::init_model(rng(), hidden);
    std::vector<double> inputs(steps), targets(steps);
    for (auto& v : inputs) v = unit();
    for (auto& v : targets) v = unit();

    const auto [loss, grads] = tsad::loss_and_gradients(model, inputs, targets);
    (void)loss;
    const std::size_t count = model.parameter_count();
    for (std::size_t i = 0; i < count; ++i) {
      const double eps = 1e-5;
      tsad::LstmParams plus = model, minus = model;
      bump_param(plus, i, eps);
      bump_param(minus, i, -eps);
      const double numeric = (tsad::sequence_loss(plus, inputs, targets) -
                              tsad::sequence_loss(minus, inputs, targets)) /
                             (2.0 * eps);
      const double analytic = read_param(grads, i);
      const double abs_err = std::abs(numeric - analytic);
      if (std::abs(analytic) < 1e-4) {
        if (abs_err > 1e-7) ++bad;
      } else {
        const double rel = abs_err / std::abs(analytic);
        worst_rel = std::max(worst_rel, rel);
        if (rel > 1e-4) ++bad;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "analytic gradients match central differences over 50 random "
                "(model, window) pairs (%d mismatches, worst rel err %.3g)",
                bad, worst_rel);
  report(3, bad == 0, buf);
}

// --- criterion 4: state-machine conformance -----------------------------------

void criterion_4() {
  // A calm stream plus one with a violent spike, so the retrain/abnormal
  // branches are all exercised.
  std::vector<std::string> violations;
  bool first_verdict_ok = true;

  for (int variant = 0; variant < 2; ++variant) {
    auto values = noisy_sine(400, 21 + variant);
    if (variant == 1) values[200] += 200.0;
    const auto run = conformance::run_engine(base_config(21 + variant), values);
    const auto rep = conformance::check_run(run);
    violations.insert(violations.end(), rep.violations.begin(), rep.violations.end());

    const long first = 2L * run.cfg.lookback + 1;
    for (const auto& res : run.results) {
      if (res.record.has_value() != (res.t >= first)) first_verdict_ok = false;
    }
  }
  for (const auto& v : violations) std::printf("    violation: %s\n", v.c_str());
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "probation silence, first verdict at t = 2b+1, AND rule, "
                "retrain-before-abnormal all hold (%zu violations)",
                violations.size());
  report(4, violations.empty() && first_verdict_ok, buf);
}

// --- criterion 5: synthetic detection ------------------------------------------

void criterion_5() {
  int spike_hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    tsad::SynthSpec spec;
    spec.kind = tsad::SynthKind::kSpike;
    spec.n = 300;
    spec.offset = 10.0;  // keep the baseline well away from zero
    spec.amplitude = 1.0;
    spec.period = 50.0;
    spec.at = 200;
    spec.magnitude = 10.0;
    spec.noise = 0.0;
    const auto run = conformance::run_engine(base_config(seed), tsad::generate_series(spec));
    const auto flagged = anomaly_steps(run.results);
    const bool hit = flagged.count(199) || flagged.count(200) || flagged.count(201);
    if (hit) ++spike_hits;
  }

  int quiet_runs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    tsad::SynthSpec spec;
    spec.kind = tsad::SynthKind::kConstant;
    spec.n = 300;
    spec.value = 10.0;
    const auto run = conformance::run_engine(base_config(seed), tsad::generate_series(spec));
    if (anomaly_steps(run.results).empty()) ++quiet_runs;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "10x spike at index 200 flagged within +/-1 in %d/10 seeds; "
                "constant stream anomaly-free in %d/10 seeds",
                spike_hits, quiet_runs);
  report(5, spike_hits >= 9 && quiet_runs == 10, buf);
}

// --- criterion 6: adaptation to a gradual level shift ---------------------------

void criterion_6() {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    tsad::SynthSpec spec;
    spec.kind = tsad::SynthKind::kLevelShift;
    spec.n = 300;
    spec.seed = seed;
    spec.from = 10.0;
    spec.to = 12.0;
    spec.at = 150;
    spec.ramp = 50;
    // A strictly noiseless baseline degenerates three-sigma (sigma = 0, so
    // any deviation breaches); 1% noise keeps the scenario realistic.
    spec.noise = 0.1;
    const auto run = conformance::run_engine(base_config(seed), tsad::generate_series(spec));
    const auto flagged = anomaly_steps(run.results);

    bool isolated = true;
    for (long t : flagged) {
      if (flagged.count(t + 1)) isolated = false;  // two consecutive flags
    }
    // The ramp finishes at t = 199; all-normal must resume within 20 steps.
    const bool settled =
        std::all_of(flagged.begin(), flagged.end(), [](long t) { return t < 220; });
    if (isolated && settled) ++good;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "gradual 10->12 shift yields only isolated flags and all-normal "
                "verdicts resume within 20 steps of completion in %d/10 seeds",
                good);
  report(6, good >= 8, buf);
}

// --- criterion 7: performance ----------------------------------------------------

void criterion_7() {
  const auto values = noisy_sine(4032, 42);
  const auto wall_start = std::chrono::steady_clock::now();
  const auto run = conformance::run_engine(base_config(42), values);
  const double total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  const auto stats = tsad::trace_stats(tsad::to_trace(run.results));
  const double mean_ms = stats.mean_elapsed_ms;
  const double ratio = stats.retrain_ratio_combined;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "4032-point stream: mean step %.3f ms (limit 100), retrain ratio "
                "%.2f%% (limit 15%%), total %.1f s (limit 420)",
                mean_ms, 100.0 * ratio, total_s);
  report(7, mean_ms <= 100.0 && ratio <= 0.15 && total_s < 420.0, buf);
}

// --- criterion 8: metric formulas -------------------------------------------------

void criterion_8() {
  const auto f1 = tsad::fscore(0.5263, 1.0);
  const auto f2 = tsad::fscore(0.174, 1.0);
  const bool f_ok = f1 && std::abs(*f1 - 0.6896) <= 1e-4 && f2 &&
                    std::abs(*f2 - 0.2964) <= 1e-3;

  // Two true labels, both hit, plus 37 stray detections: precision 2/39.
  tsad::Trace trace;
  std::set<long> det = {100, 200};
  for (int i = 0; i < 37; ++i) det.insert(300 + 2 * i);
  for (long t = 0; t < 500; ++t) {
    tsad::TracePoint p;
    p.t = t;
    p.anomaly = det.count(t) > 0;
    p.elapsed_ms = 1.0;
    trace.push_back(p);
  }
  tsad::LabelSet labels;
  labels.points = {100, 200};
  tsad::EvalConfig ecfg;
  ecfg.k = 0;
  const auto m = tsad::evaluate(trace, labels, ecfg);
  const bool scenario_ok = m.detection_count == 39 && m.tp_anomalies == 2 &&
                           m.precision && *m.precision == 2.0 / 39.0 && m.recall &&
                           *m.recall == 1.0;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "fscore(0.5263, 1) = %.6f, fscore(0.174, 1) = %.6f; constructed "
                "39-detection scenario gives precision exactly 2/39",
                f1.value_or(-1.0), f2.value_or(-1.0));
  report(8, f_ok && scenario_ok, buf);
}

// --- criterion 9: determinism ------------------------------------------------------

std::string dump_run(const std::vector<tsad::StepResult>& results, tsad::Mode mode) {
  std::string out;
  for (const auto& r : results) {
    auto j = tsad::record_to_json(r, std::to_string(r.t), mode);
    j.erase("elapsed_ms");  // wall time, the one documented nondeterminism
    out += j.dump();
    out += '\n';
  }
  return out;
}

void criterion_9() {
  const auto values = noisy_sine(300, 77);
  const auto a = conformance::run_engine(base_config(5), values);
  const auto b = conformance::run_engine(base_config(5), values);
  const auto c = conformance::run_engine(base_config(6), values);

  const bool identical = dump_run(a.results, a.cfg.mode) == dump_run(b.results, b.cfg.mode);

  bool prediction_changed = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (a.results[i].record && c.results[i].record &&
        a.results[i].record->detector1.predicted != c.results[i].record->detector1.predicted)
      prediction_changed = true;
  }
  report(9, identical && prediction_changed,
         "equal config and seed reproduce the trace byte-for-byte (timing aside); "
         "a different seed changes predictions");
}

// --- criterion 10: benchmark replication (report only) ------------------------------

void criterion_10() {
  const char* csv = std::getenv("TSAD_NAB_CSV");
  const char* label_path = std::getenv("TSAD_NAB_LABELS");
  if (!csv || !label_path) {
    report(10, true,
           "report-only benchmark skipped (set TSAD_NAB_CSV and TSAD_NAB_LABELS "
           "to a NAB series + label file to enable)");
    return;
  }
  try {
    std::ifstream sf(csv);
    auto [series, embedded] = tsad::parse_series(sf, tsad::DatasetFormat::kNab);
    (void)embedded;
    std::ifstream lf(label_path);
    const tsad::LabelSet labels = tsad::load_labels(lf, series);

    std::vector<double> fscores;
    int both_hit = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto run = conformance::run_engine(base_config(seed), series.values());
      tsad::EvalConfig ecfg;
      ecfg.k = 7;
      const auto m = tsad::evaluate(tsad::to_trace(run.results), labels, ecfg);
      if (m.recall && *m.recall == 1.0) ++both_hit;
      if (m.fscore) fscores.push_back(*m.fscore);
      std::printf("    seed %llu: recall %s fscore %s\n",
                  static_cast<unsigned long long>(seed),
                  m.recall ? std::to_string(*m.recall).c_str() : "n/a",
                  m.fscore ? std::to_string(*m.fscore).c_str() : "n/a");
    }
    std::sort(fscores.begin(), fscores.end());
    const double median =
        fscores.empty() ? 0.0
                        : (fscores.size() % 2 ? fscores[fscores.size() / 2]
                                              : 0.5 * (fscores[fscores.size() / 2 - 1] +
                                                       fscores[fscores.size() / 2]));
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "report only: %d/5 seeds reach recall 1; median fscore %.4f "
                  "(reference 0.6896)",
                  both_hit, median);
    report(10, true, buf);
  } catch (const std::exception& e) {
    report(10, true, std::string("report-only benchmark errored: ") + e.what());
  }
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
