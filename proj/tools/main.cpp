#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsad/detector.hpp"
#include "tsad/eval.hpp"
#include "tsad/ingest.hpp"
#include "tsad/synth.hpp"
#include "tsad/trace.hpp"

namespace {

using tsad::DatasetFormat;
using tsad::MatchMode;
using tsad::Mode;

// "-" means the standard stream.
std::unique_ptr<std::ifstream> open_input(const std::string& path) {
  if (path == "-") return nullptr;
  auto f = std::make_unique<std::ifstream>(path);
  if (!*f) throw tsad::InvalidInputError("cannot open input file: " + path);
  return f;
}

std::unique_ptr<std::ofstream> open_output(const std::string& path) {
  if (path.empty() || path == "-") return nullptr;
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw tsad::InvalidInputError("cannot open output file: " + path);
  return f;
}

DatasetFormat parse_format(const std::string& name) {
  if (name == "nab") return DatasetFormat::kNab;
  if (name == "yahoo") return DatasetFormat::kYahoo;
  if (name == "plain") return DatasetFormat::kPlain;
  throw tsad::InvalidConfigError("unknown format: " + name);
}

struct CommonArgs {
  int lookback = 3;
  double sigma = 3.0;
  int hidden_units = 10;
  double learning_rate = 0.15;
  int max_epochs = 50;
  double epsilon = 1e-7;
  std::uint64_t seed = 1;
  std::string mode = "dual";
  bool include_current_aare = true;

  tsad::EngineConfig engine_config() const {
    tsad::EngineConfig cfg;
    cfg.lookback = lookback;
    cfg.sigma_multiplier = sigma;
    cfg.hidden_units = hidden_units;
    cfg.epsilon = epsilon;
    cfg.seed = seed;
    cfg.include_current_aare = include_current_aare;
    if (mode == "dual") {
      cfg.mode = Mode::kDual;
    } else if (mode == "single") {
      cfg.mode = Mode::kSingle;
    } else {
      throw tsad::InvalidConfigError("unknown mode: " + mode);
    }
    cfg.train.learning_rate = learning_rate;
    cfg.train.max_epochs = max_epochs;
    return cfg;
  }
};

void add_common_options(CLI::App& cmd, CommonArgs& args) {
  cmd.add_option("-b,--lookback", args.lookback, "look-back window size")
      ->envname("TSAD_LOOKBACK");
  cmd.add_option("--sigma", args.sigma, "threshold sigma multiplier")->envname("TSAD_SIGMA");
  cmd.add_option("--hidden-units", args.hidden_units, "LSTM hidden units")
      ->envname("TSAD_HIDDEN_UNITS");
  cmd.add_option("--learning-rate", args.learning_rate, "SGD learning rate")
      ->envname("TSAD_LEARNING_RATE");
  cmd.add_option("--max-epochs", args.max_epochs, "training epoch cap")
      ->envname("TSAD_MAX_EPOCHS");
  cmd.add_option("--epsilon", args.epsilon, "AARE denominator guard")->envname("TSAD_EPSILON");
  cmd.add_option("--seed", args.seed, "base RNG seed")->envname("TSAD_SEED");
  cmd.add_option("--mode", args.mode, "dual | single")->envname("TSAD_MODE");
  cmd.add_option("--include-current-aare", args.include_current_aare,
                 "detector 1 threshold includes the current AARE")
      ->envname("TSAD_INCLUDE_CURRENT_AARE");
}

std::string percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * ratio);
  return buf;
}

int run_detect(const CommonArgs& common, const std::string& input, const std::string& format_name,
               const std::string& output) {
  const tsad::EngineConfig cfg = common.engine_config();
  cfg.validate();

  auto in_file = open_input(input);
  std::istream& in = in_file ? *in_file : std::cin;
  auto [series, yahoo_labels] = tsad::parse_series(in, parse_format(format_name));
  for (const auto& w : series.warnings) std::cerr << "warning: " << w << "\n";
  if (series.size() == 0) throw tsad::InvalidInputError("input series is empty");

  auto out_file = open_output(output);
  std::ostream& out = out_file ? *out_file : std::cout;

  tsad::Engine engine(cfg);
  std::vector<tsad::StepResult> results;
  results.reserve(series.size());
  for (const auto& point : series.points) {
    tsad::StepResult res = engine.step(point.value);
    out << tsad::record_to_json(res, point.timestamp, cfg.mode).dump() << "\n";
    results.push_back(std::move(res));
  }
  out.flush();
  if (!out) throw tsad::InvalidInputError("failed writing trace output");

  const tsad::Trace trace = tsad::to_trace(results);
  const tsad::TraceStats stats = tsad::trace_stats(trace);
  std::cerr << "points: " << stats.total_steps << "\n";
  std::cerr << "anomalies: " << stats.anomalies << "\n";
  std::cerr << "retrain ratio detector1: " << stats.retrain_steps1 << "/" << stats.scored_steps
            << " = " << percent(stats.retrain_ratio1) << "\n";
  if (stats.has_detector2) {
    std::cerr << "retrain ratio detector2: " << stats.retrain_steps2 << "/" << stats.scored_steps
              << " = " << percent(stats.retrain_ratio2) << "\n";
    std::cerr << "retrain ratio combined: " << stats.retrain_steps_any << "/"
              << stats.scored_steps << " = " << percent(stats.retrain_ratio_combined) << "\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "step time: mean %.3f ms, std %.3f ms", stats.mean_elapsed_ms,
                stats.std_elapsed_ms);
  std::cerr << buf << "\n";
  return 0;
}

int run_evaluate(const std::string& trace_path, const std::string& labels_path, long k,
                 const std::string& match_name, const std::string& output) {
  tsad::EvalConfig cfg;
  cfg.k = k;
  if (match_name == "point") {
    cfg.mode = MatchMode::kPoint;
  } else if (match_name == "event") {
    cfg.mode = MatchMode::kEvent;
  } else {
    throw tsad::InvalidConfigError("unknown match mode: " + match_name);
  }

  auto trace_file = open_input(trace_path);
  std::istream& tin = trace_file ? *trace_file : std::cin;
  const std::vector<tsad::TraceRow> rows = tsad::read_trace(tin);
  if (rows.empty()) throw tsad::InvalidInputError("trace is empty");
  const tsad::Trace trace = tsad::rows_to_trace(rows);

  std::ifstream lin(labels_path);
  if (!lin) throw tsad::InvalidInputError("cannot open labels file: " + labels_path);
  const tsad::LabelSet labels = tsad::load_labels(lin, tsad::axis_from_rows(rows));

  const tsad::Metrics m = tsad::evaluate(trace, labels, cfg);
  const tsad::TraceStats stats = tsad::trace_stats(trace);

  nlohmann::ordered_json j;
  j["k"] = cfg.k;
  j["match"] = match_name;
  j["labels"] = m.label_count;
  j["detections"] = m.detection_count;
  j["tp_anomalies"] = m.tp_anomalies;
  j["missed_anomalies"] = m.missed_anomalies;
  j["matched_detections"] = m.matched_detections;
  j["unmatched_detections"] = m.unmatched_detections;
  j["precision"] = m.precision ? nlohmann::ordered_json(*m.precision) : nullptr;
  j["recall"] = m.recall ? nlohmann::ordered_json(*m.recall) : nullptr;
  j["fscore"] = m.fscore ? nlohmann::ordered_json(*m.fscore) : nullptr;
  j["retrain_ratio1"] = stats.retrain_ratio1;
  if (stats.has_detector2) {
    j["retrain_ratio2"] = stats.retrain_ratio2;
    j["retrain_ratio_combined"] = stats.retrain_ratio_combined;
  }
  j["mean_elapsed_ms"] = stats.mean_elapsed_ms;
  j["std_elapsed_ms"] = stats.std_elapsed_ms;

  auto out_file = open_output(output);
  std::ostream& out = out_file ? *out_file : std::cout;
  out << j.dump() << "\n";

  auto rate = [](const std::optional<double>& v) -> std::string {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
  };
  auto row = [&out](const std::string& name, const std::string& value) {
    out << name << std::string(name.size() < 24 ? 24 - name.size() : 1, ' ') << value << "\n";
  };
  row("precision", rate(m.precision));
  row("recall", rate(m.recall));
  row("fscore", rate(m.fscore));
  row("labels", std::to_string(m.label_count));
  row("detections", std::to_string(m.detection_count));
  row("tp anomalies", std::to_string(m.tp_anomalies));
  row("missed anomalies", std::to_string(m.missed_anomalies));
  row("matched detections", std::to_string(m.matched_detections));
  row("unmatched detections", std::to_string(m.unmatched_detections));
  row("retrain ratio d1", percent(stats.retrain_ratio1));
  if (stats.has_detector2) {
    row("retrain ratio d2", percent(stats.retrain_ratio2));
    row("retrain ratio combined", percent(stats.retrain_ratio_combined));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f ms", stats.mean_elapsed_ms);
  row("step time mean", buf);
  std::snprintf(buf, sizeof(buf), "%.3f ms", stats.std_elapsed_ms);
  row("step time std", buf);
  out.flush();
  return 0;
}

struct SynthArgs {
  std::string kind;
  tsad::SynthSpec spec;
  std::string output = "-";
};

int run_synth(const SynthArgs& args) {
  tsad::SynthSpec spec = args.spec;
  if (args.kind == "constant") {
    spec.kind = tsad::SynthKind::kConstant;
  } else if (args.kind == "sine") {
    spec.kind = tsad::SynthKind::kSine;
  } else if (args.kind == "level-shift") {
    spec.kind = tsad::SynthKind::kLevelShift;
  } else if (args.kind == "spike") {
    spec.kind = tsad::SynthKind::kSpike;
  } else {
    throw tsad::InvalidConfigError("unknown synth kind: " + args.kind);
  }
  const std::vector<double> values = tsad::generate_series(spec);

  auto out_file = open_output(args.output);
  std::ostream& out = out_file ? *out_file : std::cout;
  for (double v : values) out << tsad::format_double(v) << "\n";
  out.flush();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming anomaly detection with self-adaptive LSTM thresholds"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string detect_input = "-";
  std::string detect_format = "plain";
  std::string detect_output = "-";
  auto* detect = app.add_subcommand("detect", "run detection over a series, emit a JSONL trace");
  detect->add_option("input", detect_input, "series file, or - for stdin");
  add_common_options(*detect, common);
  detect->add_option("--format", detect_format, "nab | yahoo | plain")->envname("TSAD_FORMAT");
  detect->add_option("-o,--output", detect_output, "trace path, or - for stdout")
      ->envname("TSAD_OUTPUT");

  std::string eval_trace = "-";
  std::string eval_labels;
  long eval_k = 7;
  std::string eval_match = "point";
  std::string eval_output = "-";
  auto* evaluate = app.add_subcommand("evaluate", "score a trace against labeled anomalies");
  evaluate->add_option("trace", eval_trace, "JSONL trace file, or - for stdin");
  evaluate->add_option("--labels", eval_labels, "label file (indices or timestamps)")
      ->envname("TSAD_LABELS")
      ->required();
  evaluate->add_option("--k", eval_k, "match window half-width")->envname("TSAD_K");
  evaluate->add_option("--match", eval_match, "point | event")->envname("TSAD_MATCH");
  evaluate->add_option("-o,--output", eval_output, "report path, or - for stdout")
      ->envname("TSAD_OUTPUT");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic test series");
  synth_cmd->add_option("kind", synth.kind, "constant | sine | level-shift | spike")->required();
  synth_cmd->add_option("--n", synth.spec.n, "number of points")->envname("TSAD_N");
  synth_cmd->add_option("--seed", synth.spec.seed, "noise RNG seed")->envname("TSAD_SEED");
  synth_cmd->add_option("--value", synth.spec.value, "constant level")->envname("TSAD_VALUE");
  synth_cmd->add_option("--amplitude", synth.spec.amplitude, "sine amplitude")
      ->envname("TSAD_AMPLITUDE");
  synth_cmd->add_option("--period", synth.spec.period, "sine period in points")
      ->envname("TSAD_PERIOD");
  synth_cmd->add_option("--offset", synth.spec.offset, "sine vertical offset")
      ->envname("TSAD_OFFSET");
  synth_cmd->add_option("--noise", synth.spec.noise, "gaussian noise stddev")
      ->envname("TSAD_NOISE");
  synth_cmd->add_option("--at", synth.spec.at, "spike / shift index")->envname("TSAD_AT");
  synth_cmd->add_option("--magnitude", synth.spec.magnitude, "spike height")
      ->envname("TSAD_MAGNITUDE");
  synth_cmd->add_option("--from", synth.spec.from, "level before the shift")
      ->envname("TSAD_FROM");
  synth_cmd->add_option("--to", synth.spec.to, "level after the shift")->envname("TSAD_TO");
  synth_cmd->add_option("--ramp", synth.spec.ramp, "points to ramp between levels")
      ->envname("TSAD_RAMP");
  synth_cmd->add_option("-o,--output", synth.output, "series path, or - for stdout")
      ->envname("TSAD_OUTPUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (detect->parsed()) return run_detect(common, detect_input, detect_format, detect_output);
    if (evaluate->parsed())
      return run_evaluate(eval_trace, eval_labels, eval_k, eval_match, eval_output);
    return run_synth(synth);
  } catch (const tsad::InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const tsad::InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
