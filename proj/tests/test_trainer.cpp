#include <doctest.h>

#include <cmath>

#include "colloc/checkpoint.hpp"
#include "colloc/error.hpp"
#include "colloc/trainer.hpp"
#include "colloc/util.hpp"
#include "support.hpp"

using namespace colloc;

TEST_CASE("adamw single step examples") {
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.0;
  std::vector<double> w{1.0};
  std::vector<double> g{1.0};
  AdamWState<double> st(1);
  adamw_step<double>(w, g, {}, st, cfg);
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(0.9));

  AdamWConfig still;
  still.weight_decay = 0.0;
  std::vector<double> w2{0.3, -2.0};
  std::vector<double> zero{0.0, 0.0};
  AdamWState<double> st2(2);
  adamw_step<double>(w2, zero, {}, st2, still);
  CHECK(w2 == std::vector<double>{0.3, -2.0});

  AdamWConfig decay;  // lr 6e-4, wd 0.1
  std::vector<double> w3{0.3, -2.0};
  AdamWState<double> st3(2);
  adamw_step<double>(w3, zero, {}, st3, decay);
  CHECK(w3[0] == doctest::Approx(0.3 * (1 - 0.00006)).epsilon(1e-15));
  CHECK(w3[1] == doctest::Approx(-2.0 * (1 - 0.00006)).epsilon(1e-15));

  // Decay mask: only the first coordinate decays.
  std::vector<double> w4{0.3, -2.0};
  const std::vector<std::uint8_t> mask{1, 0};
  AdamWState<double> st4(2);
  adamw_step<double>(w4, zero, mask, st4, decay);
  CHECK(w4[0] == doctest::Approx(0.3 * (1 - 0.00006)).epsilon(1e-15));
  CHECK(w4[1] == -2.0);
}

TEST_CASE("adamw matches a scalar oracle for five steps") {
  const double lr = 0.01, b1 = 0.9, b2 = 0.95, eps = 1e-8, wd = 0.1;
  const double grads[5] = {0.5, -1.25, 2.0, 0.1, -0.7};
  double w = 0.8, m = 0.0, v = 0.0;
  std::vector<double> param{0.8};
  AdamWState<double> st(1);
  AdamWConfig cfg{lr, b1, b2, eps, wd};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    w = w - lr * wd * w - lr * mhat / (std::sqrt(vhat) + eps);
    std::vector<double> gv{g};
    adamw_step<double>(param, gv, {}, st, cfg);
    CHECK(std::abs(param[0] - w) < 1e-10);
  }
  CHECK(st.step == 5);
}

TEST_CASE("adamw rejects non-finite gradients before touching state") {
  std::vector<float> w{1.0f, 2.0f};
  std::vector<float> g{0.1f, NAN};
  AdamWState<float> st(2);
  try {
    adamw_step<float>(w, g, {}, st, {});
    FAIL("expected NonFiniteGradient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteGradient);
  }
  CHECK(w == std::vector<float>{1.0f, 2.0f});
  CHECK(st.step == 0);
  CHECK(st.m[0] == 0.0f);
}

TEST_CASE("default schedule") {
  const TrainConfig t;
  CHECK(t.total_steps() == 1200);
  CHECK(t.batch_size * t.batches_per_epoch == 9600);
  CHECK(t.validate_every == 300);
  CHECK(t.optimizer.learning_rate == 6e-4);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

namespace {

const ModelConfig kSmall{1, 2, 16, 166, 24};

TrainConfig short_schedule() {
  TrainConfig t;
  t.batches_per_epoch = 10;
  t.epochs = 3;
  t.validate_every = 10;
  t.seed = 4;
  t.train_eval_size = 200;
  t.optimizer.learning_rate = 3e-3;
  return t;
}

}  // namespace

TEST_CASE("short training run: learning, schedule, determinism, checkpoint") {
  const Dataset d = generate_dataset(1.5, 7);
  const TrainConfig t = short_schedule();
  RunResult a = train_run(d, kSmall, t);
  const RunResult b = train_run(d, kSmall, t);
  const auto& rec = a.record;

  REQUIRE(rec.step_loss.size() == 30);
  REQUIRE(rec.evals.size() == 4);
  CHECK(rec.evals[0].step == 0);
  CHECK(rec.evals[1].step == 10);
  CHECK(rec.evals[3].step == 30);
  CHECK(rec.evals.back().val_loss < rec.evals.front().val_loss);
  CHECK(rec.step_loss.back() < rec.step_loss.front());
  CHECK(rec.best_step >= 10);  // step 0 never wins
  double best = 1e300;
  for (std::size_t i = 1; i < rec.evals.size(); ++i) best = std::min(best, rec.evals[i].val_loss);
  CHECK(rec.best_val_loss == best);

  CHECK(rec.step_loss == b.record.step_loss);
  CHECK(a.best.values == b.best.values);

  testing::TempDir dir("train");
  write_run(a, dir.path());
  const auto reloaded = load_checkpoint(dir / "checkpoint.bin");
  const auto valid = encode_sentences(d.valid, TokenVocab());
  Workspace<float> ws;
  CHECK(mean_sequence_loss(reloaded, valid, ws) == doctest::Approx(rec.best_val_loss).epsilon(1e-6));

  const auto lines = read_lines(dir / "loss.csv");
  CHECK(lines[0] == "step,train_loss,val_loss,train_eval_loss");
  CHECK(lines.size() == 32);
  const auto back = read_run_record(dir / "run.json");
  CHECK(back.best_step == rec.best_step);
  CHECK(back.best_val_loss == rec.best_val_loss);
  CHECK(back.model == kSmall);
  CHECK(back.evals.size() == rec.evals.size());
  CHECK(back.alpha == 1.5);
}

TEST_CASE("training input validation") {
  Dataset empty;
  CHECK_THROWS_AS(train_run(empty, kSmall, short_schedule()), Error);
  const Dataset d = generate_dataset(1.5, 7);
  ModelConfig wrong_vocab = kSmall;
  wrong_vocab.vocab_size = 100;
  CHECK_THROWS_AS(train_run(d, wrong_vocab, short_schedule()), Error);
}
