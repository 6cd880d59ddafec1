#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tsad/common.hpp"
#include "tsad/lstm.hpp"

namespace tsad {

// Which AARE history feeds a detector's three-sigma threshold: everything
// logged so far, or only the points the detector itself judged normal.
enum class ThresholdPolicy { kAll, kNormalOnly };

enum class Mode { kDual, kSingle };
enum class ExecPolicy { kSerial, kParallel };
enum class Phase { kProbation, kDetecting };

struct EngineConfig {
  int lookback = 3;  // b
  double sigma_multiplier = 3.0;
  double epsilon = 1e-7;  // |v| clamp in the AARE denominator
  std::uint64_t seed = 1;
  Mode mode = Mode::kDual;
  ExecPolicy exec = ExecPolicy::kParallel;
  int hidden_units = 10;
  // When true, detector 1's threshold history includes the current, not yet
  // judged AARE_t. Detector 2 always excludes it (its normal flag does not
  // exist yet).
  bool include_current_aare = true;
  // On an abnormal verdict the freshly retrained model is discarded by
  // default; set to adopt it instead.
  bool keep_retrained_on_abnormal = false;
  TrainConfig train;  // train.seed is derived per retrain, not taken from here

  void validate() const;
};

// Mean absolute relative error over a b-point window, denominators clamped
// to epsilon: (1/b) * sum |v_y - vhat_y| / max(|v_y|, epsilon).
double compute_aare(std::span<const double> observed, std::span<const double> predicted,
                    double epsilon);

// mu + multiplier * sigma over the included entries, sigma the population
// standard deviation. Throws EmptyHistoryError when nothing is included.
double compute_threshold(std::span<const double> aare_history,
                         const std::vector<bool>& include_flags, double sigma_multiplier);

struct StepVerdict {
  long t = 0;
  double value = 0.0;
  double predicted = 0.0;     // vhat_t in effect after the step
  double aare = 0.0;          // AARE_t in effect after the step
  double aare_checked = 0.0;  // value the threshold comparison used (pre-retrain)
  double threshold = 0.0;
  bool is_abnormal = false;
  bool retrained = false;
  std::optional<int> epochs_used;  // present when retrained
};

struct FinalRecord {
  long t = 0;
  double value = 0.0;
  StepVerdict detector1;
  std::optional<StepVerdict> detector2;  // absent in single mode
  bool anomaly = false;
  double elapsed_ms = 0.0;
};

// Per-step engine output. Probation steps carry the shared pipeline's
// prediction/AARE (when they exist) and no record; detection steps carry the
// full record.
struct StepResult {
  long t = 0;
  double value = 0.0;
  Phase phase = Phase::kProbation;
  std::optional<double> predicted;  // probation: shared vhat_t, once t >= b
  std::optional<double> aare;       // probation: shared AARE_t, once t >= 2b-1
  std::optional<FinalRecord> record;
  double elapsed_ms = 0.0;
};

// One detector: model, prediction/AARE logs, normal flags, threshold policy.
class Detector {
 public:
  Detector(int id, ThresholdPolicy policy, LstmModel model, long first_pred_t,
           std::vector<double> predictions, long first_aare_t, std::vector<double> aares);

  // Runs one post-probation step: AARE, threshold, verdict, optional
  // retrain, next-step prediction. `observed` spans the whole stream
  // history [0..t].
  StepVerdict step(long t, std::span<const double> observed, const EngineConfig& cfg);

  int id() const { return id_; }
  ThresholdPolicy policy() const { return policy_; }
  const LstmModel& model() const { return model_; }
  long retrain_count() const { return retrain_count_; }

  // Log access for oracles and conformance checks.
  long first_prediction_t() const { return first_pred_t_; }
  long first_aare_t() const { return first_aare_t_; }
  long last_logged_aare_t() const { return first_aare_t_ + static_cast<long>(aares_.size()) - 1; }
  double predicted_at(long t) const;
  double aare_at(long t) const;
  bool considered_normal(long t) const;  // meaningful under kNormalOnly

 private:
  double threshold_for(long t, double current_aare, const EngineConfig& cfg) const;

  int id_;
  ThresholdPolicy policy_;
  LstmModel model_;
  long first_pred_t_;
  std::vector<double> predictions_;  // predictions_[t - first_pred_t_] = vhat_t
  long first_aare_t_;
  std::vector<double> aares_;        // aares_[t - first_aare_t_] = AARE_t
  std::vector<bool> normal_flags_;   // parallel to aares_
  long retrain_count_ = 0;
};

// Streaming orchestrator: probation bootstrap on a shared pipeline, then one
// or two detectors joined by the AND rule.
class Engine {
 public:
  explicit Engine(EngineConfig cfg);

  // Feed the next observation; t must be exactly the next index (0, 1, ...).
  StepResult step(long t, double value);
  StepResult step(double value) { return step(next_t_, value); }

  const EngineConfig& config() const { return cfg_; }
  int lookback() const { return cfg_.lookback; }
  long probation_end() const { return 2L * cfg_.lookback; }  // last probation t
  long next_t() const { return next_t_; }
  Phase phase() const {
    return next_t_ <= probation_end() ? Phase::kProbation : Phase::kDetecting;
  }
  const std::vector<double>& observed() const { return observed_; }
  const Detector& detector1() const { return *d1_; }
  const Detector* detector2() const { return d2_ ? &*d2_ : nullptr; }
  bool has_detectors() const { return d1_.has_value(); }

 private:
  void probation_step(long t, StepResult& out);
  void detection_step(long t, StepResult& out);

  EngineConfig cfg_;
  std::vector<double> observed_;
  long next_t_ = 0;

  // Shared probation pipeline; duplicated into the detectors at t = 2b.
  LstmModel shared_model_;
  bool has_shared_model_ = false;
  std::vector<double> shared_predictions_;  // index t - b
  std::vector<double> shared_aares_;        // index t - (2b-1)

  std::optional<Detector> d1_;
  std::optional<Detector> d2_;
};

}  // namespace tsad
