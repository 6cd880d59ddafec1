#include "tsad/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace tsad {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Explicit bits->double mapping keeps init byte-reproducible across standard
// libraries (std::uniform_real_distribution is implementation-defined).
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

// Per-step activations cached for backpropagation through time.
struct StepCache {
  std::vector<double> gate[4];  // post-nonlinearity i, f, g, o
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
  double y = 0.0;
};

void forward_step(const LstmParams& p, double x, const std::vector<double>& h_prev,
                  const std::vector<double>& c_prev, StepCache& out) {
  const int h = p.hidden_units;
  for (auto& v : out.gate) v.assign(h, 0.0);
  out.c.assign(h, 0.0);
  out.tanh_c.assign(h, 0.0);
  out.h.assign(h, 0.0);

  for (int gi = 0; gi < 4; ++gi) {
    const GateParams& g = p.gates[gi];
    for (int u = 0; u < h; ++u) {
      double a = g.w_in[u] * x + g.bias[u];
      const double* row = g.w_rec.data() + static_cast<std::size_t>(u) * h;
      for (int k = 0; k < h; ++k) a += row[k] * h_prev[k];
      out.gate[gi][u] = (gi == kCellGate) ? std::tanh(a) : sigmoid(a);
    }
  }
  for (int u = 0; u < h; ++u) {
    out.c[u] = out.gate[kForgetGate][u] * c_prev[u] + out.gate[kInputGate][u] * out.gate[kCellGate][u];
    out.tanh_c[u] = std::tanh(out.c[u]);
    out.h[u] = out.gate[kOutputGate][u] * out.tanh_c[u];
  }
  double y = p.b_out;
  for (int u = 0; u < h; ++u) y += p.w_out[u] * out.h[u];
  out.y = y;
}

void check_pairs(std::span<const double> inputs, std::span<const double> targets) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw InvalidInputError("training pairs must be non-empty and aligned");
  if (!all_finite(inputs) || !all_finite(targets))
    throw InvalidInputError("non-finite value in training pairs");
}

}  // namespace

LstmParams LstmParams::zeros(int hidden_units) {
  if (hidden_units < 1) throw InvalidConfigError("hidden_units must be >= 1");
  LstmParams p;
  p.hidden_units = hidden_units;
  const std::size_t h = static_cast<std::size_t>(hidden_units);
  for (auto& g : p.gates) {
    g.w_in.assign(h, 0.0);
    g.w_rec.assign(h * h, 0.0);
    g.bias.assign(h, 0.0);
  }
  p.w_out.assign(h, 0.0);
  p.b_out = 0.0;
  return p;
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](double) { ++n; });
  return n;
}

double LstmParams::l2_norm() const {
  double s = 0.0;
  for_each([&](double v) { s += v * v; });
  return std::sqrt(s);
}

void LstmParams::scale_all(double a) {
  for_each([&](double& v) { v *= a; });
}

void LstmParams::axpy(double a, const LstmParams& other) {
  for (int gi = 0; gi < 4; ++gi) {
    const GateParams& og = other.gates[gi];
    GateParams& g = gates[gi];
    for (std::size_t k = 0; k < g.w_in.size(); ++k) g.w_in[k] += a * og.w_in[k];
    for (std::size_t k = 0; k < g.w_rec.size(); ++k) g.w_rec[k] += a * og.w_rec[k];
    for (std::size_t k = 0; k < g.bias.size(); ++k) g.bias[k] += a * og.bias[k];
  }
  for (std::size_t k = 0; k < w_out.size(); ++k) w_out[k] += a * other.w_out[k];
  b_out += a * other.b_out;
}

bool LstmParams::finite() const {
  bool ok = true;
  for_each([&](double v) { ok = ok && std::isfinite(v); });
  return ok;
}

TrainingWindow::TrainingWindow(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw InvalidInputError("window needs at least two values");
  if (!all_finite(values_)) throw InvalidInputError("non-finite value in window");
  auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  norm_min_ = *lo;
  norm_max_ = *hi;
}

TrainingWindow TrainingWindow::from(std::span<const double> values) {
  return TrainingWindow(std::vector<double>(values.begin(), values.end()));
}

std::vector<double> TrainingWindow::normalized() const {
  std::vector<double> xs(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) xs[i] = normalize(values_[i]);
  return xs;
}

LstmModel init_model(std::uint64_t seed, int hidden_units) {
  if (hidden_units < 1) throw InvalidConfigError("hidden_units must be >= 1");
  LstmModel m;
  static_cast<LstmParams&>(m) = LstmParams::zeros(hidden_units);
  m.init_seed = seed;

  const double s = 1.0 / std::sqrt(static_cast<double>(hidden_units));
  std::mt19937_64 rng(seed);
  auto draw = [&] { return s * (2.0 * next_unit(rng) - 1.0); };
  for (auto& g : m.gates) {
    for (double& v : g.w_in) v = draw();
    for (double& v : g.w_rec) v = draw();
    // biases stay zero
  }
  for (double& v : m.w_out) v = draw();
  return m;
}

double sequence_loss(const LstmParams& params, std::span<const double> inputs,
                     std::span<const double> targets) {
  check_pairs(inputs, targets);
  const int h = params.hidden_units;
  std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
  StepCache cache;
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    forward_step(params, inputs[i], h_prev, c_prev, cache);
    const double e = cache.y - targets[i];
    loss += e * e;
    h_prev = cache.h;
    c_prev = cache.c;
  }
  return loss / static_cast<double>(inputs.size());
}

std::pair<double, LstmParams> loss_and_gradients(const LstmParams& params,
                                                 std::span<const double> inputs,
                                                 std::span<const double> targets) {
  check_pairs(inputs, targets);
  const int h = params.hidden_units;
  const std::size_t steps = inputs.size();

  std::vector<StepCache> caches(steps);
  std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    forward_step(params, inputs[i], h_prev, c_prev, caches[i]);
    const double e = caches[i].y - targets[i];
    loss += e * e;
    h_prev = caches[i].h;
    c_prev = caches[i].c;
  }
  loss /= static_cast<double>(steps);

  LstmParams grads = LstmParams::zeros(h);
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);
  std::vector<double> da[4];
  for (auto& v : da) v.assign(h, 0.0);

  for (std::size_t i = steps; i-- > 0;) {
    const StepCache& cc = caches[i];
    const std::vector<double>* hp = (i == 0) ? nullptr : &caches[i - 1].h;
    const std::vector<double>* cp = (i == 0) ? nullptr : &caches[i - 1].c;

    const double dy = 2.0 * (cc.y - targets[i]) / static_cast<double>(steps);
    grads.b_out += dy;
    for (int u = 0; u < h; ++u) grads.w_out[u] += dy * cc.h[u];

    for (int u = 0; u < h; ++u) {
      const double dh = dy * params.w_out[u] + dh_next[u];
      const double tc = cc.tanh_c[u];
      const double dout = dh * tc;
      const double dc = dh * cc.gate[kOutputGate][u] * (1.0 - tc * tc) + dc_next[u];

      const double ig = cc.gate[kInputGate][u];
      const double fg = cc.gate[kForgetGate][u];
      const double gg = cc.gate[kCellGate][u];
      const double og = cc.gate[kOutputGate][u];
      const double c_prev_u = cp ? (*cp)[u] : 0.0;

      da[kInputGate][u] = dc * gg * ig * (1.0 - ig);
      da[kForgetGate][u] = dc * c_prev_u * fg * (1.0 - fg);
      da[kCellGate][u] = dc * ig * (1.0 - gg * gg);
      da[kOutputGate][u] = dout * og * (1.0 - og);
      dc_next[u] = dc * fg;
    }

    const double x = inputs[i];
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (int gi = 0; gi < 4; ++gi) {
      const GateParams& g = params.gates[gi];
      GateParams& gg = grads.gates[gi];
      for (int u = 0; u < h; ++u) {
        const double d = da[gi][u];
        gg.w_in[u] += d * x;
        gg.bias[u] += d;
        double* grow = gg.w_rec.data() + static_cast<std::size_t>(u) * h;
        const double* row = g.w_rec.data() + static_cast<std::size_t>(u) * h;
        if (hp) {
          for (int k = 0; k < h; ++k) grow[k] += d * (*hp)[k];
        }
        for (int k = 0; k < h; ++k) dh_next[k] += row[k] * d;
      }
    }
  }

  return {loss, std::move(grads)};
}

TrainResult train_model(LstmModel model, const TrainingWindow& window, const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0.0) throw InvalidConfigError("learning_rate must be > 0");
  if (cfg.min_epochs < 1 || cfg.min_epochs > cfg.max_epochs)
    throw InvalidConfigError("need 1 <= min_epochs <= max_epochs");
  if (cfg.patience < 1) throw InvalidConfigError("patience must be >= 1");

  const std::vector<double> xs = window.normalized();
  const std::span<const double> inputs(xs.data(), xs.size() - 1);
  const std::span<const double> targets(xs.data() + 1, xs.size() - 1);

  TrainResult out;
  out.epoch_losses.reserve(static_cast<std::size_t>(cfg.max_epochs));

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  int epoch = 0;
  while (epoch < cfg.max_epochs) {
    auto [loss, grads] = loss_and_gradients(model, inputs, targets);
    const double gnorm = grads.l2_norm();
    if (cfg.grad_clip_norm > 0.0 && gnorm > cfg.grad_clip_norm)
      grads.scale_all(cfg.grad_clip_norm / gnorm);
    model.axpy(-cfg.learning_rate, grads);
    ++epoch;
    out.epoch_losses.push_back(loss);

    if (loss < best * (1.0 - cfg.rel_improvement_tol)) {
      best = loss;
      stale = 0;
    } else {
      ++stale;
    }
    if (epoch >= cfg.min_epochs && stale >= cfg.patience) break;
  }

  if (!model.finite()) throw StateError("non-finite parameters after training");
  out.model = std::move(model);
  out.epochs_used = epoch;
  return out;
}

TrainResult train_window(const TrainingWindow& window, const TrainConfig& cfg, int hidden_units) {
  // A retrain always starts from a fresh seed-derived init, never from the
  // possibly anomaly-contaminated previous model.
  return train_model(init_model(cfg.seed, hidden_units), window, cfg);
}

double predict_next(const LstmParams& params, const TrainingWindow& window) {
  const std::vector<double> xs = window.normalized();
  const int h = params.hidden_units;
  std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
  StepCache cache;
  for (double x : xs) {
    forward_step(params, x, h_prev, c_prev, cache);
    h_prev = cache.h;
    c_prev = cache.c;
  }
  return window.denormalize(cache.y);
}

}  // namespace tsad
