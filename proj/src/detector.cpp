#include "tsad/detector.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsad {

void EngineConfig::validate() const {
  if (lookback < 2) throw InvalidConfigError("lookback must be >= 2");
  if (!(sigma_multiplier >= 0.0)) throw InvalidConfigError("sigma_multiplier must be >= 0");
  if (!(epsilon > 0.0)) throw InvalidConfigError("epsilon must be > 0");
  if (hidden_units < 1) throw InvalidConfigError("hidden_units must be >= 1");
  if (!(train.learning_rate > 0.0)) throw InvalidConfigError("learning_rate must be > 0");
  if (train.min_epochs < 1 || train.min_epochs > train.max_epochs)
    throw InvalidConfigError("need 1 <= min_epochs <= max_epochs");
  if (train.patience < 1) throw InvalidConfigError("patience must be >= 1");
  if (!(train.rel_improvement_tol >= 0.0))
    throw InvalidConfigError("rel_improvement_tol must be >= 0");
}

double compute_aare(std::span<const double> observed, std::span<const double> predicted,
                    double epsilon) {
  if (observed.empty() || observed.size() != predicted.size())
    throw InvalidInputError("AARE windows must be non-empty and aligned");
  if (!all_finite(observed) || !all_finite(predicted))
    throw InvalidInputError("non-finite value in AARE window");
  if (!(epsilon > 0.0)) throw InvalidInputError("epsilon must be > 0");

  double sum = 0.0;
  for (std::size_t y = 0; y < observed.size(); ++y) {
    const double denom = std::max(std::abs(observed[y]), epsilon);
    sum += std::abs(observed[y] - predicted[y]) / denom;
  }
  return sum / static_cast<double>(observed.size());
}

double compute_threshold(std::span<const double> aare_history,
                         const std::vector<bool>& include_flags, double sigma_multiplier) {
  if (aare_history.size() != include_flags.size())
    throw InvalidInputError("history and flags must be aligned");

  long n = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < aare_history.size(); ++i) {
    if (include_flags[i]) {
      sum += aare_history[i];
      ++n;
    }
  }
  if (n == 0) throw EmptyHistoryError("threshold over an empty AARE history");

  const double mu = sum / static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < aare_history.size(); ++i) {
    if (include_flags[i]) {
      const double d = aare_history[i] - mu;
      sq += d * d;
    }
  }
  const double sigma = std::sqrt(sq / static_cast<double>(n));
  return mu + sigma_multiplier * sigma;
}

Detector::Detector(int id, ThresholdPolicy policy, LstmModel model, long first_pred_t,
                   std::vector<double> predictions, long first_aare_t, std::vector<double> aares)
    : id_(id),
      policy_(policy),
      model_(std::move(model)),
      first_pred_t_(first_pred_t),
      predictions_(std::move(predictions)),
      first_aare_t_(first_aare_t),
      aares_(std::move(aares)) {
  // Probation entries predate any verdict and count as normal.
  normal_flags_.assign(aares_.size(), true);
}

double Detector::predicted_at(long t) const {
  const long i = t - first_pred_t_;
  if (i < 0 || i >= static_cast<long>(predictions_.size()))
    throw StateError("prediction log has no entry for t=" + std::to_string(t));
  return predictions_[static_cast<std::size_t>(i)];
}

double Detector::aare_at(long t) const {
  const long i = t - first_aare_t_;
  if (i < 0 || i >= static_cast<long>(aares_.size()))
    throw StateError("AARE log has no entry for t=" + std::to_string(t));
  return aares_[static_cast<std::size_t>(i)];
}

bool Detector::considered_normal(long t) const {
  const long i = t - first_aare_t_;
  if (i < 0 || i >= static_cast<long>(normal_flags_.size()))
    throw StateError("no normal flag for t=" + std::to_string(t));
  return normal_flags_[static_cast<std::size_t>(i)];
}

double Detector::threshold_for(long t, double current_aare, const EngineConfig& cfg) const {
  std::vector<double> values;
  std::vector<bool> flags;
  values.reserve(aares_.size() + 1);
  flags.reserve(aares_.size() + 1);
  for (std::size_t i = 0; i < aares_.size(); ++i) {
    const long y = first_aare_t_ + static_cast<long>(i);
    if (y >= t) break;
    values.push_back(aares_[i]);
    flags.push_back(policy_ == ThresholdPolicy::kAll || normal_flags_[i]);
  }
  if (policy_ == ThresholdPolicy::kAll && cfg.include_current_aare) {
    values.push_back(current_aare);
    flags.push_back(true);
  }
  return compute_threshold(values, flags, cfg.sigma_multiplier);
}

StepVerdict Detector::step(long t, std::span<const double> observed, const EngineConfig& cfg) {
  const long b = cfg.lookback;
  if (static_cast<long>(observed.size()) <= t)
    throw StateError("observed history does not cover t");
  if (t != first_aare_t_ + static_cast<long>(aares_.size()))
    throw StateError("detector stepped out of order");
  // The AARE window needs predictions for y = t-b+1 .. t.
  if (t - first_pred_t_ + 1 > static_cast<long>(predictions_.size()))
    throw StateError("prediction log does not cover t");

  const std::span<const double> obs_win = observed.subspan(static_cast<std::size_t>(t - b + 1),
                                                           static_cast<std::size_t>(b));
  const std::span<const double> pred_win(
      predictions_.data() + static_cast<std::size_t>(t - b + 1 - first_pred_t_),
      static_cast<std::size_t>(b));

  StepVerdict v;
  v.t = t;
  v.value = observed[static_cast<std::size_t>(t)];

  double aare = compute_aare(obs_win, pred_win, cfg.epsilon);
  v.aare_checked = aare;
  aares_.push_back(aare);
  v.threshold = threshold_for(t, aare, cfg);

  if (aare <= v.threshold) {
    v.is_abnormal = false;
  } else {
    // Retrain on [v_{t-b} .. v_{t-1}] (the current point is suspect),
    // re-predict vhat_t, re-check against the same threshold.
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(id_), static_cast<std::uint64_t>(t));
    const TrainingWindow train_win =
        TrainingWindow::from(observed.subspan(static_cast<std::size_t>(t - b),
                                              static_cast<std::size_t>(b)));
    TrainResult tr = train_window(train_win, tc, cfg.hidden_units);
    const double new_pred = predict_next(tr.model, train_win);

    predictions_[static_cast<std::size_t>(t - first_pred_t_)] = new_pred;
    aare = compute_aare(obs_win, pred_win, cfg.epsilon);
    aares_.back() = aare;

    v.retrained = true;
    v.epochs_used = tr.epochs_used;
    ++retrain_count_;

    if (aare <= v.threshold) {
      v.is_abnormal = false;
      model_ = std::move(tr.model);  // pattern change absorbed
    } else {
      v.is_abnormal = true;
      if (cfg.keep_retrained_on_abnormal) model_ = std::move(tr.model);
    }
  }

  v.aare = aare;
  v.predicted = predictions_[static_cast<std::size_t>(t - first_pred_t_)];
  if (policy_ == ThresholdPolicy::kNormalOnly) normal_flags_.push_back(!v.is_abnormal);
  else normal_flags_.push_back(true);

  // Every branch ends by forecasting the next point with the surviving model.
  const TrainingWindow pred_win_next = TrainingWindow::from(obs_win);
  predictions_.push_back(predict_next(model_, pred_win_next));

  return v;
}

Engine::Engine(EngineConfig cfg) : cfg_(cfg) {
  cfg_.validate();
}

StepResult Engine::step(long t, double value) {
  const auto start = std::chrono::steady_clock::now();
  if (t != next_t_)
    throw SequencingError("expected t=" + std::to_string(next_t_) + ", got t=" + std::to_string(t));
  if (!std::isfinite(value)) throw InvalidInputError("non-finite observation");

  observed_.push_back(value);
  ++next_t_;

  StepResult out;
  out.t = t;
  out.value = value;

  if (t <= probation_end()) {
    probation_step(t, out);
  } else {
    detection_step(t, out);
  }

  out.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (out.record) out.record->elapsed_ms = out.elapsed_ms;
  return out;
}

void Engine::probation_step(long t, StepResult& out) {
  const long b = cfg_.lookback;
  out.phase = Phase::kProbation;

  if (t >= b) out.predicted = shared_predictions_[static_cast<std::size_t>(t - b)];

  if (t >= 2 * b - 1) {
    const std::span<const double> obs_win(observed_.data() + (t - b + 1),
                                          static_cast<std::size_t>(b));
    const std::span<const double> pred_win(shared_predictions_.data() + (t - b + 1 - b),
                                           static_cast<std::size_t>(b));
    shared_aares_.push_back(compute_aare(obs_win, pred_win, cfg_.epsilon));
    out.aare = shared_aares_.back();
  }

  if (t >= b - 1) {
    // Bootstrap: train on the b most recent values, forecast the next point.
    TrainConfig tc = cfg_.train;
    tc.seed = derive_seed(cfg_.seed, 0, static_cast<std::uint64_t>(t));
    const TrainingWindow win = TrainingWindow::from(
        std::span<const double>(observed_.data() + (t - b + 1), static_cast<std::size_t>(b)));
    TrainResult tr = train_window(win, tc, cfg_.hidden_units);
    shared_model_ = std::move(tr.model);
    has_shared_model_ = true;
    shared_predictions_.push_back(predict_next(shared_model_, win));
  }

  if (t == 2 * b) {
    // Everything produced during probation is duplicated into the detectors.
    d1_.emplace(1, ThresholdPolicy::kAll, shared_model_, b, shared_predictions_, 2 * b - 1,
                shared_aares_);
    if (cfg_.mode == Mode::kDual)
      d2_.emplace(2, ThresholdPolicy::kNormalOnly, shared_model_, b, shared_predictions_,
                  2 * b - 1, shared_aares_);
  }
}

void Engine::detection_step(long t, StepResult& out) {
  out.phase = Phase::kDetecting;

  FinalRecord rec;
  rec.t = t;
  rec.value = out.value;

  const std::span<const double> obs(observed_.data(), observed_.size());
  const bool dual = cfg_.mode == Mode::kDual;

#ifdef _OPENMP
  if (dual && cfg_.exec == ExecPolicy::kParallel) {
    StepVerdict v1, v2;
    std::exception_ptr e1, e2;
#pragma omp parallel sections num_threads(2)
    {
#pragma omp section
      {
        try {
          v1 = d1_->step(t, obs, cfg_);
        } catch (...) {
          e1 = std::current_exception();
        }
      }
#pragma omp section
      {
        try {
          v2 = d2_->step(t, obs, cfg_);
        } catch (...) {
          e2 = std::current_exception();
        }
      }
    }
    if (e1) std::rethrow_exception(e1);
    if (e2) std::rethrow_exception(e2);
    rec.detector1 = v1;
    rec.detector2 = v2;
    rec.anomaly = v1.is_abnormal && v2.is_abnormal;
    out.record = std::move(rec);
    return;
  }
#endif

  rec.detector1 = d1_->step(t, obs, cfg_);
  if (dual) {
    rec.detector2 = d2_->step(t, obs, cfg_);
    rec.anomaly = rec.detector1.is_abnormal && rec.detector2->is_abnormal;
  } else {
    rec.anomaly = rec.detector1.is_abnormal;
  }
  out.record = std::move(rec);
}

}  // namespace tsad
