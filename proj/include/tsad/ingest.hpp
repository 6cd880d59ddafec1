#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsad/common.hpp"

namespace tsad {

enum class DatasetFormat { kNab, kYahoo, kPlain };

struct SeriesPoint {
  std::string timestamp;  // original token; equals the index for PLAIN
  double value = 0.0;
};

// Per-index timestamp view used to resolve label entries. Built from a
// parsed Series or from a recorded trace.
struct TimeAxis {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> epoch_seconds;  // parallel to tokens; empty unless datetimes
  double interval_seconds = 1.0;
  long size() const { return static_cast<long>(tokens.size()); }
};

struct Series {
  DatasetFormat format = DatasetFormat::kPlain;
  std::vector<SeriesPoint> points;
  std::vector<std::int64_t> epoch_seconds;  // NAB only
  std::optional<double> interval;           // seconds for NAB, unit steps otherwise
  std::vector<std::string> warnings;        // irregular gaps, not errors

  std::size_t size() const { return points.size(); }
  std::vector<double> values() const;
  TimeAxis axis() const;
};

// Ordered anomaly time points. Entries from label files are 0-based series
// indices (datetime entries resolved to the nearest index); entries from a
// Yahoo is_anomaly column are the raw integer timestamps as printed.
struct LabelSet {
  std::vector<long> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  bool operator==(const LabelSet&) const = default;
};

// Parses a dataset in the declared format. Yahoo inputs also yield the label
// set read from the is_anomaly column.
std::pair<Series, std::optional<LabelSet>> parse_series(std::istream& in, DatasetFormat format);

// One label per line: a bare integer is a 0-based index, anything else must
// be a datetime resolved to the nearest timestamp (error beyond half an
// interval). Blank lines and '#' comments are ignored.
LabelSet load_labels(std::istream& in, const TimeAxis& axis);
LabelSet load_labels(std::istream& in, const Series& series);

// Maps a Yahoo face-value label set onto 0-based series indices by exact
// integer-timestamp match.
LabelSet resolve_to_indices(const Series& series, const LabelSet& raw);

// Writes the series back out in its own format with full value fidelity
// (shortest round-trip decimals). Yahoo output needs the labels to restore
// the is_anomaly column.
void write_series(std::ostream& out, const Series& series, const LabelSet* yahoo_labels = nullptr);

// "YYYY-MM-DD HH:MM:SS" (or 'T' separated, optional fraction) as UTC epoch.
std::optional<std::int64_t> parse_datetime_utc(std::string_view text);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

}  // namespace tsad
