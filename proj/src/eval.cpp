#include "tsad/eval.hpp"

#include <algorithm>
#include <cmath>

namespace tsad {

std::optional<double> fscore(double precision, double recall) {
  if (!(precision >= 0.0 && precision <= 1.0) || !(recall >= 0.0 && recall <= 1.0))
    throw InvalidInputError("precision and recall must lie in [0, 1]");
  const double sum = precision + recall;
  if (sum == 0.0) return std::nullopt;
  return 2.0 * precision * recall / sum;
}

namespace {

struct Unit {
  long start = 0;
  long end = 0;  // inclusive
};

std::vector<Unit> detection_units(const Trace& trace, MatchMode mode) {
  std::vector<Unit> units;
  for (const auto& p : trace) {
    if (!p.anomaly) continue;
    if (mode == MatchMode::kEvent && !units.empty() && units.back().end + 1 == p.t) {
      units.back().end = p.t;
    } else {
      units.push_back({p.t, p.t});
    }
  }
  return units;
}

}  // namespace

Metrics evaluate(const Trace& trace, const LabelSet& labels, const EvalConfig& cfg) {
  if (cfg.k < 0) throw InvalidConfigError("match window K must be >= 0");
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i - 1].t >= trace[i].t)
      throw InvalidInputError("trace time indices must be strictly increasing");
  }
  if (!std::is_sorted(labels.points.begin(), labels.points.end()) ||
      std::adjacent_find(labels.points.begin(), labels.points.end()) != labels.points.end())
    throw InvalidInputError("labels must be strictly increasing");
  if (labels.empty() && !cfg.allow_empty_labels)
    throw InvalidInputError("label set is empty; recall is undefined");

  const std::vector<Unit> units = detection_units(trace, cfg.mode);

  Metrics m;
  m.label_count = static_cast<long>(labels.size());
  m.detection_count = static_cast<long>(units.size());

  // Units are disjoint with increasing bounds, so the first unit ending at or
  // after the window start is the only candidate for a label.
  for (long label : labels.points) {
    const auto it = std::lower_bound(units.begin(), units.end(), label - cfg.k,
                                     [](const Unit& u, long lo) { return u.end < lo; });
    const bool hit = it != units.end() && it->start <= label + cfg.k;
    if (hit) {
      ++m.tp_anomalies;
    } else {
      ++m.missed_anomalies;
    }
  }
  for (const Unit& u : units) {
    const auto it =
        std::lower_bound(labels.points.begin(), labels.points.end(), u.start - cfg.k);
    const bool matched = it != labels.points.end() && *it <= u.end + cfg.k;
    if (matched) {
      ++m.matched_detections;
    } else {
      ++m.unmatched_detections;
    }
  }

  if (m.label_count > 0)
    m.recall = static_cast<double>(m.tp_anomalies) / static_cast<double>(m.label_count);
  if (m.detection_count > 0)
    m.precision =
        static_cast<double>(m.matched_detections) / static_cast<double>(m.detection_count);
  if (m.precision && m.recall) m.fscore = fscore(*m.precision, *m.recall);
  return m;
}

TraceStats trace_stats(const Trace& trace) {
  TraceStats s;
  s.total_steps = static_cast<long>(trace.size());

  double sum = 0.0;
  for (const auto& p : trace) {
    if (p.probation) continue;
    ++s.scored_steps;
    if (p.anomaly) ++s.anomalies;
    if (p.retrained1) ++s.retrain_steps1;
    if (p.retrained2) ++s.retrain_steps2;
    if (p.retrained1 || p.retrained2) ++s.retrain_steps_any;
    if (p.has_detector2) s.has_detector2 = true;
    sum += p.elapsed_ms;
  }
  if (s.scored_steps == 0) throw InvalidInputError("trace has no post-probation steps");

  const double n = static_cast<double>(s.scored_steps);
  s.retrain_ratio1 = static_cast<double>(s.retrain_steps1) / n;
  s.retrain_ratio2 = static_cast<double>(s.retrain_steps2) / n;
  s.retrain_ratio_combined = static_cast<double>(s.retrain_steps_any) / n;
  s.mean_elapsed_ms = sum / n;
  double sq = 0.0;
  for (const auto& p : trace) {
    if (p.probation) continue;
    const double d = p.elapsed_ms - s.mean_elapsed_ms;
    sq += d * d;
  }
  s.std_elapsed_ms = std::sqrt(sq / n);
  return s;
}

Trace to_trace(std::span<const StepResult> results) {
  Trace out;
  out.reserve(results.size());
  for (const auto& r : results) {
    TracePoint p;
    p.t = r.t;
    p.probation = r.phase == Phase::kProbation;
    p.elapsed_ms = r.elapsed_ms;
    if (r.record) {
      p.anomaly = r.record->anomaly;
      p.retrained1 = r.record->detector1.retrained;
      if (r.record->detector2) {
        p.has_detector2 = true;
        p.retrained2 = r.record->detector2->retrained;
      }
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace tsad
