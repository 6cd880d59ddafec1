#include "tsad/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>

namespace tsad {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::optional<double> parse_number(std::string_view tok) {
  tok = trim(tok);
  if (tok.empty()) return std::nullopt;
  std::string s(tok);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> parse_integer(std::string_view tok) {
  tok = trim(tok);
  if (tok.empty()) return std::nullopt;
  std::string s(tok);
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double median_diff(const std::vector<double>& diffs) {
  std::vector<double> tmp = diffs;
  const std::size_t mid = tmp.size() / 2;
  std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
  return tmp[mid];
}

void infer_interval(Series& series, const std::vector<double>& stamps, const char* unit) {
  if (stamps.size() < 2) return;
  std::vector<double> diffs(stamps.size() - 1);
  for (std::size_t i = 1; i < stamps.size(); ++i) diffs[i - 1] = stamps[i] - stamps[i - 1];
  const double interval = median_diff(diffs);
  series.interval = interval;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] != interval) {
      std::ostringstream msg;
      msg << "irregular gap of " << diffs[i] << ' ' << unit << " before point " << (i + 1)
          << " (expected " << interval << ')';
      series.warnings.push_back(msg.str());
    }
  }
}

}  // namespace

std::vector<double> Series::values() const {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = points[i].value;
  return out;
}

TimeAxis Series::axis() const {
  TimeAxis axis;
  axis.tokens.reserve(points.size());
  for (const auto& p : points) axis.tokens.push_back(p.timestamp);
  axis.epoch_seconds = epoch_seconds;
  axis.interval_seconds = interval.value_or(1.0);
  return axis;
}

std::optional<std::int64_t> parse_datetime_utc(std::string_view text) {
  text = trim(text);
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  char sep = 0;
  int consumed = 0;
  const std::string s(text);
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &year, &month, &day, &sep, &hour,
                  &minute, &second, &consumed) != 7)
    return std::nullopt;
  if (sep != ' ' && sep != 'T') return std::nullopt;
  std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty()) {
    // Optional fractional seconds, e.g. ".000000" in NAB label files.
    if (rest.front() != '.') return std::nullopt;
    rest.remove_prefix(1);
    if (rest.empty()) return std::nullopt;
    for (char c : rest)
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
    return std::nullopt;

  std::tm tm{};
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = second;
  const time_t epoch = timegm(&tm);
  if (epoch == static_cast<time_t>(-1)) return std::nullopt;
  return static_cast<std::int64_t>(epoch);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::pair<Series, std::optional<LabelSet>> parse_series(std::istream& in, DatasetFormat format) {
  Series series;
  series.format = format;
  std::optional<LabelSet> labels;

  std::string line;
  long lineno = 0;

  if (format == DatasetFormat::kNab || format == DatasetFormat::kYahoo) {
    if (!read_line(in, line)) throw ParseError("missing header", 1);
    ++lineno;
    const std::string head = lower(trim(line));
    const char* expected =
        format == DatasetFormat::kNab ? "timestamp,value" : "timestamp,value,is_anomaly";
    if (head != expected)
      throw ParseError("expected header '" + std::string(expected) + "', got '" + head + "'",
                       lineno);
  }
  if (format == DatasetFormat::kYahoo) labels.emplace();

  std::vector<double> numeric_stamps;  // yahoo ordering/interval

  while (read_line(in, line)) {
    ++lineno;
    const std::string_view row = trim(line);
    if (row.empty()) continue;

    switch (format) {
      case DatasetFormat::kPlain: {
        const auto v = parse_number(row);
        if (!v) throw ParseError("not a number: '" + std::string(row) + "'", lineno);
        series.points.push_back({std::to_string(series.points.size()), *v});
        break;
      }
      case DatasetFormat::kNab: {
        const auto fields = split_csv(row);
        if (fields.size() != 2) throw ParseError("expected 2 fields", lineno);
        const auto epoch = parse_datetime_utc(fields[0]);
        if (!epoch) throw ParseError("bad timestamp: '" + std::string(fields[0]) + "'", lineno);
        const auto v = parse_number(fields[1]);
        if (!v) throw ParseError("bad value: '" + std::string(trim(fields[1])) + "'", lineno);
        if (!series.epoch_seconds.empty() && *epoch <= series.epoch_seconds.back())
          throw OrderingError("non-monotonic timestamp at line " + std::to_string(lineno));
        series.epoch_seconds.push_back(*epoch);
        series.points.push_back({std::string(trim(fields[0])), *v});
        break;
      }
      case DatasetFormat::kYahoo: {
        const auto fields = split_csv(row);
        if (fields.size() != 3) throw ParseError("expected 3 fields", lineno);
        const auto stamp = parse_number(fields[0]);
        if (!stamp) throw ParseError("bad timestamp: '" + std::string(trim(fields[0])) + "'", lineno);
        const auto v = parse_number(fields[1]);
        if (!v) throw ParseError("bad value: '" + std::string(trim(fields[1])) + "'", lineno);
        const auto flag = parse_number(fields[2]);
        if (!flag || (*flag != 0.0 && *flag != 1.0))
          throw ParseError("is_anomaly must be 0 or 1", lineno);
        if (!numeric_stamps.empty() && *stamp <= numeric_stamps.back())
          throw OrderingError("non-monotonic timestamp at line " + std::to_string(lineno));
        numeric_stamps.push_back(*stamp);
        series.points.push_back({std::string(trim(fields[0])), *v});
        if (*flag == 1.0) labels->points.push_back(static_cast<long>(std::llround(*stamp)));
        break;
      }
    }
  }

  if (format == DatasetFormat::kNab) {
    std::vector<double> stamps(series.epoch_seconds.begin(), series.epoch_seconds.end());
    infer_interval(series, stamps, "s");
  } else if (format == DatasetFormat::kYahoo) {
    infer_interval(series, numeric_stamps, "steps");
  } else if (series.points.size() >= 2) {
    series.interval = 1.0;
  }

  return {std::move(series), std::move(labels)};
}

LabelSet load_labels(std::istream& in, const TimeAxis& axis) {
  LabelSet labels;
  std::string line;
  long lineno = 0;
  while (read_line(in, line)) {
    ++lineno;
    std::string_view entry = trim(line);
    const std::size_t hash = entry.find('#');
    if (hash != std::string_view::npos) entry = trim(entry.substr(0, hash));
    if (entry.empty()) continue;

    if (const auto idx = parse_integer(entry)) {
      if (*idx < 0 || *idx >= axis.size())
        throw RangeError("label index " + std::to_string(*idx) + " outside series of " +
                         std::to_string(axis.size()) + " points (line " + std::to_string(lineno) +
                         ")");
      labels.points.push_back(*idx);
      continue;
    }

    const auto epoch = parse_datetime_utc(entry);
    if (!epoch || axis.epoch_seconds.empty())
      throw ResolutionError("cannot resolve label '" + std::string(entry) + "' (line " +
                            std::to_string(lineno) + ")");
    // Nearest timestamp; reject anything farther than half an interval.
    const auto it =
        std::lower_bound(axis.epoch_seconds.begin(), axis.epoch_seconds.end(), *epoch);
    long best = -1;
    std::int64_t best_diff = 0;
    auto consider = [&](long i) {
      if (i < 0 || i >= axis.size()) return;
      const std::int64_t d = std::llabs(axis.epoch_seconds[static_cast<std::size_t>(i)] - *epoch);
      if (best < 0 || d < best_diff) {
        best = i;
        best_diff = d;
      }
    };
    consider(static_cast<long>(it - axis.epoch_seconds.begin()));
    consider(static_cast<long>(it - axis.epoch_seconds.begin()) - 1);
    if (best < 0 || static_cast<double>(best_diff) > axis.interval_seconds / 2.0)
      throw ResolutionError("label '" + std::string(entry) + "' is " + std::to_string(best_diff) +
                            "s from the nearest timestamp (line " + std::to_string(lineno) + ")");
    labels.points.push_back(best);
  }

  std::sort(labels.points.begin(), labels.points.end());
  labels.points.erase(std::unique(labels.points.begin(), labels.points.end()),
                      labels.points.end());
  return labels;
}

LabelSet load_labels(std::istream& in, const Series& series) {
  return load_labels(in, series.axis());
}

LabelSet resolve_to_indices(const Series& series, const LabelSet& raw) {
  LabelSet out;
  for (long stamp : raw.points) {
    bool found = false;
    for (std::size_t i = 0; i < series.points.size(); ++i) {
      const auto v = parse_number(series.points[i].timestamp);
      if (v && std::llround(*v) == stamp) {
        out.points.push_back(static_cast<long>(i));
        found = true;
        break;
      }
    }
    if (!found)
      throw ResolutionError("no series point has timestamp " + std::to_string(stamp));
  }
  std::sort(out.points.begin(), out.points.end());
  out.points.erase(std::unique(out.points.begin(), out.points.end()), out.points.end());
  return out;
}

void write_series(std::ostream& out, const Series& series, const LabelSet* yahoo_labels) {
  switch (series.format) {
    case DatasetFormat::kPlain:
      for (const auto& p : series.points) out << format_double(p.value) << '\n';
      break;
    case DatasetFormat::kNab:
      out << "timestamp,value\n";
      for (const auto& p : series.points)
        out << p.timestamp << ',' << format_double(p.value) << '\n';
      break;
    case DatasetFormat::kYahoo: {
      out << "timestamp,value,is_anomaly\n";
      for (const auto& p : series.points) {
        bool flagged = false;
        if (yahoo_labels) {
          const auto v = parse_number(p.timestamp);
          flagged = v && std::find(yahoo_labels->points.begin(), yahoo_labels->points.end(),
                                   std::llround(*v)) != yahoo_labels->points.end();
        }
        out << p.timestamp << ',' << format_double(p.value) << ',' << (flagged ? 1 : 0) << '\n';
      }
      break;
    }
  }
}

}  // namespace tsad
