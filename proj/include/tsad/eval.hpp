#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tsad/common.hpp"
#include "tsad/detector.hpp"
#include "tsad/ingest.hpp"

namespace tsad {

// POINT scores each detection point on its own; EVENT first merges maximal
// runs of consecutive detections into one unit.
enum class MatchMode { kPoint, kEvent };

// The slice of a step record the scorer needs.
struct TracePoint {
  long t = 0;
  bool probation = false;
  bool anomaly = false;
  bool retrained1 = false;
  bool retrained2 = false;
  bool has_detector2 = false;
  double elapsed_ms = 0.0;
};

using Trace = std::vector<TracePoint>;

struct EvalConfig {
  long k = 7;  // window half-width: label t matches units touching [t-k, t+k]
  MatchMode mode = MatchMode::kPoint;
  bool allow_empty_labels = false;
};

// Counts plus the derived rates; a rate is absent when its denominator is
// zero (rendered as "n/a" downstream).
struct Metrics {
  long label_count = 0;
  long detection_count = 0;  // units scored: points, or merged events
  long tp_anomalies = 0;
  long missed_anomalies = 0;
  long matched_detections = 0;
  long unmatched_detections = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> fscore;
};

struct TraceStats {
  long total_steps = 0;
  long scored_steps = 0;  // post-probation
  long anomalies = 0;
  long retrain_steps1 = 0;
  long retrain_steps2 = 0;
  long retrain_steps_any = 0;
  double retrain_ratio1 = 0.0;
  double retrain_ratio2 = 0.0;
  double retrain_ratio_combined = 0.0;  // steps where either detector retrained
  double mean_elapsed_ms = 0.0;
  double std_elapsed_ms = 0.0;  // population
  bool has_detector2 = false;
};

// 2PR/(P+R); empty when P+R = 0. Inputs outside [0,1] are rejected.
std::optional<double> fscore(double precision, double recall);

// K-window scoring: a label is hit when a detection unit intersects its
// window, a unit is matched when it intersects some label's window. Labels
// are 0-based trace indices.
Metrics evaluate(const Trace& trace, const LabelSet& labels, const EvalConfig& cfg);

// Retraining ratios and per-step latency over the post-probation part.
TraceStats trace_stats(const Trace& trace);

Trace to_trace(std::span<const StepResult> results);

}  // namespace tsad
