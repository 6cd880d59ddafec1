#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/detector.hpp"
#include "tsad/eval.hpp"
#include "tsad/ingest.hpp"

namespace tsad {

// One JSON Lines record. Field order is part of the output contract:
// t, timestamp, value, phase, predicted1, aare1, thd1, abnormal1, retrained1,
// (dual mode: the same five for detector 2), anomaly, elapsed_ms. Probation
// records carry nulls for everything past `phase` except elapsed_ms; single
// mode omits the detector-2 keys entirely.
nlohmann::ordered_json record_to_json(const StepResult& result, const std::string& timestamp,
                                      Mode mode);

// A record read back from a trace file.
struct TraceRow {
  long t = 0;
  std::string timestamp;
  double value = 0.0;
  std::string phase;
  std::optional<double> predicted1, aare1, thd1;
  std::optional<bool> abnormal1, retrained1;
  std::optional<double> predicted2, aare2, thd2;
  std::optional<bool> abnormal2, retrained2;
  std::optional<bool> anomaly;
  double elapsed_ms = 0.0;
  bool has_detector2 = false;  // detector-2 keys were present
};

std::vector<TraceRow> read_trace(std::istream& in);

Trace rows_to_trace(const std::vector<TraceRow>& rows);

// Timestamp view of a recorded trace, for resolving datetime labels.
TimeAxis axis_from_rows(const std::vector<TraceRow>& rows);

}  // namespace tsad
