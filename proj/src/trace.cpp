#include "tsad/trace.hpp"

#include <algorithm>
#include <istream>

namespace tsad {

namespace {

using ordered_json = nlohmann::ordered_json;

void put_verdict(ordered_json& j, const StepVerdict& v, int id) {
  const std::string n = std::to_string(id);
  j["predicted" + n] = v.predicted;
  j["aare" + n] = v.aare;
  j["thd" + n] = v.threshold;
  j["abnormal" + n] = v.is_abnormal;
  j["retrained" + n] = v.retrained;
}

void put_nulls(ordered_json& j, int id) {
  const std::string n = std::to_string(id);
  j["predicted" + n] = nullptr;
  j["aare" + n] = nullptr;
  j["thd" + n] = nullptr;
  j["abnormal" + n] = nullptr;
  j["retrained" + n] = nullptr;
}

}  // namespace

ordered_json record_to_json(const StepResult& result, const std::string& timestamp, Mode mode) {
  ordered_json j;
  j["t"] = result.t;
  j["timestamp"] = timestamp;
  j["value"] = result.value;
  j["phase"] = result.phase == Phase::kProbation ? "probation" : "detecting";
  if (result.record) {
    const FinalRecord& rec = *result.record;
    put_verdict(j, rec.detector1, 1);
    if (mode == Mode::kDual) {
      if (!rec.detector2) throw StateError("dual-mode record lacks detector 2");
      put_verdict(j, *rec.detector2, 2);
    }
    j["anomaly"] = rec.anomaly;
  } else {
    put_nulls(j, 1);
    if (mode == Mode::kDual) put_nulls(j, 2);
    j["anomaly"] = nullptr;
  }
  j["elapsed_ms"] = result.elapsed_ms;
  return j;
}

namespace {

std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::optional<bool> opt_bool(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<bool>();
}

}  // namespace

std::vector<TraceRow> read_trace(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("invalid JSON record", lineno);
    try {
      TraceRow r;
      r.t = j.at("t").get<long>();
      r.timestamp = j.at("timestamp").get<std::string>();
      r.value = j.at("value").get<double>();
      r.phase = j.at("phase").get<std::string>();
      r.predicted1 = opt_number(j, "predicted1");
      r.aare1 = opt_number(j, "aare1");
      r.thd1 = opt_number(j, "thd1");
      r.abnormal1 = opt_bool(j, "abnormal1");
      r.retrained1 = opt_bool(j, "retrained1");
      r.has_detector2 = j.contains("predicted2");
      r.predicted2 = opt_number(j, "predicted2");
      r.aare2 = opt_number(j, "aare2");
      r.thd2 = opt_number(j, "thd2");
      r.abnormal2 = opt_bool(j, "abnormal2");
      r.retrained2 = opt_bool(j, "retrained2");
      r.anomaly = opt_bool(j, "anomaly");
      r.elapsed_ms = j.at("elapsed_ms").get<double>();
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad trace record: ") + e.what(), lineno);
    }
  }
  return rows;
}

Trace rows_to_trace(const std::vector<TraceRow>& rows) {
  Trace out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    TracePoint p;
    p.t = r.t;
    p.probation = r.phase == "probation";
    p.anomaly = r.anomaly.value_or(false);
    p.retrained1 = r.retrained1.value_or(false);
    p.retrained2 = r.retrained2.value_or(false);
    p.has_detector2 = r.has_detector2;
    p.elapsed_ms = r.elapsed_ms;
    out.push_back(p);
  }
  return out;
}

TimeAxis axis_from_rows(const std::vector<TraceRow>& rows) {
  TimeAxis axis;
  axis.tokens.reserve(rows.size());
  std::vector<std::int64_t> epochs;
  epochs.reserve(rows.size());
  bool all_datetimes = !rows.empty();
  for (const auto& r : rows) {
    axis.tokens.push_back(r.timestamp);
    if (all_datetimes) {
      if (auto e = parse_datetime_utc(r.timestamp)) {
        epochs.push_back(*e);
      } else {
        all_datetimes = false;
        epochs.clear();
      }
    }
  }
  if (all_datetimes && epochs.size() >= 2) {
    std::vector<std::int64_t> diffs;
    diffs.reserve(epochs.size() - 1);
    for (std::size_t i = 1; i < epochs.size(); ++i) diffs.push_back(epochs[i] - epochs[i - 1]);
    auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
    std::nth_element(diffs.begin(), mid, diffs.end());
    axis.epoch_seconds = std::move(epochs);
    axis.interval_seconds = static_cast<double>(*mid);
  } else if (all_datetimes) {
    axis.epoch_seconds = std::move(epochs);
  }
  return axis;
}

}  // namespace tsad
