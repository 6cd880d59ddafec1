#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "tsad/lstm.hpp"

using namespace tsad;

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double read_param(const LstmParams& p, std::size_t idx) {
  std::size_t i = 0;
  double out = 0.0;
  p.for_each([&](double v) {
    if (i++ == idx) out = v;
  });
  return out;
}

void bump_param(LstmParams& p, std::size_t idx, double delta) {
  std::size_t i = 0;
  p.for_each([&](double& v) {
    if (i++ == idx) v += delta;
  });
}

}  // namespace

TEST_CASE("init is deterministic and bounded") {
  const LstmModel a = init_model(42, 10);
  const LstmModel b = init_model(42, 10);
  CHECK(a == b);
  CHECK(a.init_seed == 42);

  const double bound = 1.0 / std::sqrt(10.0);
  a.for_each([&](double v) { CHECK(std::abs(v) <= bound); });
  for (const auto& g : a.gates)
    for (double v : g.bias) CHECK(v == 0.0);
  CHECK(a.b_out == 0.0);

  const LstmModel c = init_model(43, 10);
  CHECK_FALSE(a == c);
}

TEST_CASE("init rejects zero hidden units") {
  CHECK_THROWS_AS(init_model(42, 0), InvalidConfigError);
  CHECK_THROWS_AS(LstmParams::zeros(0), InvalidConfigError);
}

TEST_CASE("parameter bookkeeping") {
  const LstmModel m = init_model(7, 3);
  // 4 gates x (3 + 9 + 3) + readout 3 + output bias.
  CHECK(m.parameter_count() == 4 * 15 + 3 + 1);
  CHECK(m.finite());

  LstmParams doubled = m;
  doubled.axpy(1.0, m);
  CHECK(doubled.l2_norm() == doctest::Approx(2.0 * m.l2_norm()).epsilon(1e-12));
  doubled.scale_all(0.5);
  CHECK(doubled.l2_norm() == doctest::Approx(m.l2_norm()).epsilon(1e-12));
}

TEST_CASE("training window normalization") {
  const TrainingWindow w({3.0, 9.0, 27.0});
  CHECK(w.norm_min() == 3.0);
  CHECK(w.norm_max() == 27.0);
  for (double v : w.values())
    CHECK(w.denormalize(w.normalize(v)) == doctest::Approx(v).epsilon(1e-12));
  CHECK(w.normalized().front() == 0.0);
  CHECK(w.normalized().back() == 1.0);

  // Degenerate window: everything maps to 0, unit scale back.
  const TrainingWindow flat({7.0, 7.0, 7.0});
  CHECK(flat.normalize(7.0) == 0.0);
  CHECK(flat.denormalize(0.25) == 7.25);

  CHECK_THROWS_AS(TrainingWindow({5.0}), InvalidInputError);
  CHECK_THROWS_AS(TrainingWindow({1.0, std::nan("")}), InvalidInputError);
}

TEST_CASE("zero model predicts the window minimum") {
  const LstmParams zero = LstmParams::zeros(4);
  const TrainingWindow w({0.0, 5.0, 10.0});
  CHECK(predict_next(zero, w) == 0.0);

  const TrainingWindow flat({7.0, 7.0, 7.0});
  CHECK(predict_next(zero, flat) == 7.0);
}

TEST_CASE("constant window is learned to within 0.5") {
  TrainConfig cfg;
  cfg.seed = 42;
  const TrainingWindow w({5.0, 5.0, 5.0});
  const TrainResult r = train_window(w, cfg);
  CHECK(r.epochs_used >= 1);
  CHECK(r.epochs_used <= cfg.max_epochs);
  CHECK(r.model.finite());
  CHECK(std::abs(predict_next(r.model, w) - 5.0) <= 0.5);
}

TEST_CASE("ramp window prediction stays in a sane range") {
  const TrainingWindow w({1.0, 2.0, 3.0});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    const TrainResult r = train_window(w, cfg);
    const double pred = predict_next(r.model, w);
    CHECK(std::isfinite(pred));
    CHECK(pred >= -3.0);
    CHECK(pred <= 7.0);
    CHECK(r.epochs_used >= 1);
    CHECK(r.epochs_used <= 50);
  }
}

TEST_CASE("training is deterministic") {
  TrainConfig cfg;
  cfg.seed = 11;
  const TrainingWindow w({2.0, 4.0, 3.0});
  const TrainResult a = train_window(w, cfg);
  const TrainResult b = train_window(w, cfg);
  CHECK(a.model == b.model);
  CHECK(a.epochs_used == b.epochs_used);
  CHECK(a.epoch_losses == b.epoch_losses);
}

TEST_CASE("loss does not increase in at least 90% of seeded runs") {
  const TrainingWindow w({5.0, 5.0, 5.0});
  int improved = 0;
  const int runs = 25;
  for (int s = 0; s < runs; ++s) {
    TrainConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s) + 100;
    const TrainResult r = train_window(w, cfg);
    REQUIRE(!r.epoch_losses.empty());
    if (r.epoch_losses.back() <= r.epoch_losses.front()) ++improved;
  }
  CHECK(improved * 10 >= runs * 9);
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 2 + static_cast<int>(rng() % 2);
    const LstmModel m = init_model(rng(), h);
    const std::size_t steps = 3 + rng() % 3;
    std::vector<double> inputs(steps), targets(steps);
    for (auto& v : inputs) v = unit(rng);
    for (auto& v : targets) v = unit(rng);

    const auto [loss, grads] = loss_and_gradients(m, inputs, targets);
    CHECK(loss == doctest::Approx(sequence_loss(m, inputs, targets)).epsilon(1e-12));

    const double eps = 1e-5;
    const std::size_t count = m.parameter_count();
    for (std::size_t k = 0; k < count; ++k) {
      LstmParams plus = m;
      LstmParams minus = m;
      bump_param(plus, k, eps);
      bump_param(minus, k, -eps);
      const double fd =
          (sequence_loss(plus, inputs, targets) - sequence_loss(minus, inputs, targets)) /
          (2.0 * eps);
      const double g = read_param(grads, k);
      if (std::abs(g) < 1e-4) {
        CHECK(std::abs(fd - g) <= 1e-7);
      } else {
        CHECK(std::abs(fd - g) / std::abs(g) <= 1e-4);
      }
    }
  }
}

TEST_CASE("training input validation") {
  const TrainingWindow w({1.0, 2.0, 3.0});
  TrainConfig cfg;

  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train_window(w, cfg), InvalidConfigError);
  cfg = TrainConfig{};
  cfg.min_epochs = 10;
  cfg.max_epochs = 5;
  CHECK_THROWS_AS(train_window(w, cfg), InvalidConfigError);
  cfg = TrainConfig{};
  cfg.patience = 0;
  CHECK_THROWS_AS(train_window(w, cfg), InvalidConfigError);

  const std::vector<double> xs = {0.1, 0.2};
  const std::vector<double> ys = {0.2};
  CHECK_THROWS_AS(sequence_loss(LstmParams::zeros(2), xs, ys), InvalidInputError);
  CHECK_THROWS_AS(loss_and_gradients(LstmParams::zeros(2), {}, {}), InvalidInputError);
}

TEST_CASE("epoch losses record the pre-update loss and respect the cap") {
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.max_epochs = 4;
  cfg.patience = 10;  // keep the loop running to the cap
  const TrainingWindow w({1.0, 3.0, 2.0});
  const TrainResult r = train_window(w, cfg);
  CHECK(r.epochs_used == 4);
  CHECK(r.epoch_losses.size() == 4);
  const LstmModel fresh = init_model(5, 10);
  const std::vector<double> xs = w.normalized();
  const std::vector<double> in(xs.begin(), xs.end() - 1);
  const std::vector<double> tg(xs.begin() + 1, xs.end());
  CHECK(r.epoch_losses.front() == doctest::Approx(sequence_loss(fresh, in, tg)).epsilon(1e-12));
}
