#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tsad/common.hpp"

namespace tsad {

// One gate's parameters. Input dimension is fixed at 1 (univariate series),
// so the input weights collapse to a vector of length H.
struct GateParams {
  std::vector<double> w_in;   // H
  std::vector<double> w_rec;  // H x H, row-major
  std::vector<double> bias;   // H
};

enum GateIndex { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

// Full parameter block of the single-layer predictor. Doubles as the
// gradient container (same layout, see loss_and_gradients).
struct LstmParams {
  int hidden_units = 0;
  std::array<GateParams, 4> gates;  // input, forget, cell-candidate, output
  std::vector<double> w_out;        // 1 x H readout
  double b_out = 0.0;

  static LstmParams zeros(int hidden_units);

  // Visits every parameter in a fixed order (gates, then readout).
  void for_each(auto&& fn) {
    for (auto& g : gates) {
      for (double& v : g.w_in) fn(v);
      for (double& v : g.w_rec) fn(v);
      for (double& v : g.bias) fn(v);
    }
    for (double& v : w_out) fn(v);
    fn(b_out);
  }
  void for_each(auto&& fn) const {
    for (const auto& g : gates) {
      for (double v : g.w_in) fn(v);
      for (double v : g.w_rec) fn(v);
      for (double v : g.bias) fn(v);
    }
    for (double v : w_out) fn(v);
    fn(b_out);
  }

  std::size_t parameter_count() const;
  double l2_norm() const;
  void scale_all(double a);
  // this += a * other; layouts must match.
  void axpy(double a, const LstmParams& other);
  bool finite() const;
};

struct LstmModel : LstmParams {
  std::uint64_t init_seed = 0;
};

inline bool operator==(const GateParams& a, const GateParams& b) {
  return a.w_in == b.w_in && a.w_rec == b.w_rec && a.bias == b.bias;
}
inline bool operator==(const LstmParams& a, const LstmParams& b) {
  return a.hidden_units == b.hidden_units && a.gates == b.gates && a.w_out == b.w_out &&
         a.b_out == b.b_out;
}

struct TrainConfig {
  double learning_rate = 0.15;
  int max_epochs = 50;
  int min_epochs = 1;
  int patience = 3;                  // epochs without relative improvement
  double rel_improvement_tol = 1e-3;
  double grad_clip_norm = 5.0;       // global L2 clip per step
  std::uint64_t seed = 0;            // fresh-init seed for train_window
};

// A look-back window together with its min-max normalization parameters.
// Degenerate windows (max == min) normalize every value to 0 and denormalize
// with unit scale.
class TrainingWindow {
 public:
  explicit TrainingWindow(std::vector<double> values);
  static TrainingWindow from(std::span<const double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double norm_min() const { return norm_min_; }
  double norm_max() const { return norm_max_; }
  double scale() const { return norm_max_ > norm_min_ ? norm_max_ - norm_min_ : 1.0; }

  double normalize(double v) const { return (v - norm_min_) / scale(); }
  double denormalize(double y) const { return y * scale() + norm_min_; }
  std::vector<double> normalized() const;

 private:
  std::vector<double> values_;
  double norm_min_ = 0.0;
  double norm_max_ = 0.0;
};

struct TrainResult {
  LstmModel model;
  int epochs_used = 0;
  std::vector<double> epoch_losses;  // pre-update loss of each executed epoch
};

// Weights uniform on [-1/sqrt(H), 1/sqrt(H)], biases zero. Deterministic for
// a fixed seed regardless of the standard library in use.
LstmModel init_model(std::uint64_t seed, int hidden_units);

// MSE over the one-step-ahead pairs of a normalized sequence: the network is
// fed inputs[0..n-1] from a zero state and each step's readout is compared to
// targets[i].
double sequence_loss(const LstmParams& params, std::span<const double> inputs,
                     std::span<const double> targets);

// Loss plus analytic gradients via backpropagation through time.
std::pair<double, LstmParams> loss_and_gradients(const LstmParams& params,
                                                 std::span<const double> inputs,
                                                 std::span<const double> targets);

// Full-batch SGD with early stopping on the training-loss plateau. The model
// is freshly initialized from cfg.seed; the window supplies the b-1 pairs.
TrainResult train_window(const TrainingWindow& window, const TrainConfig& cfg,
                         int hidden_units = 10);

// Same loop, starting from the given parameters instead of a fresh init.
TrainResult train_model(LstmModel model, const TrainingWindow& window, const TrainConfig& cfg);

// Feeds the window's normalized values through the network from a zero state
// and de-normalizes the final readout: the one-step-ahead forecast.
double predict_next(const LstmParams& params, const TrainingWindow& window);

}  // namespace tsad
