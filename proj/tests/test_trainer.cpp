#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dirlink/trainer.hpp"
#include "helpers.hpp"

using namespace dirlink;

TEST_CASE("Adam closed forms") {
  AdamOptions o;
  o.lr = 0.1;
  Adam adam(2, o);
  std::vector<double> theta{1.0, 1.0};
  const std::vector<double> g{0.5, 0.0};
  adam.step(theta, g);
  // First bias-corrected step is lr * g / (|g| + eps).
  CHECK(theta[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
  CHECK(theta[1] == 1.0);
  adam.step(theta, g);
  CHECK(theta[0] == doctest::Approx(1.0 - 0.2).epsilon(1e-7));
  CHECK(adam.steps() == 2);

  const std::vector<double> bad{NAN, 0.0};
  const auto before = theta;
  CHECK_THROWS_AS(adam.step(theta, bad), DivergenceError);
  CHECK(theta == before);
  CHECK(adam.steps() == 2);

  Adam fresh(3, o);
  CHECK(fresh.preconditioner() == std::vector<double>{1.0, 1.0, 1.0});
  AdamOptions zero;
  zero.lr = 0.0;
  CHECK_THROWS_AS(Adam(1, zero), ConfigError);
}

TEST_CASE("early stopping bookkeeping") {
  EarlyStopping flat(1);
  CHECK(flat.observe(0, 3.0));
  CHECK_FALSE(flat.observe(1, 3.0));
  CHECK_FALSE(flat.should_stop());
  CHECK_FALSE(flat.observe(2, 3.0));
  CHECK(flat.should_stop());
  CHECK(flat.best_epoch() == 0);

  EarlyStopping perfect(5);
  perfect.observe(0, 6.0);
  for (std::size_t e = 1; e <= 6; ++e) perfect.observe(e, 5.5);
  CHECK(perfect.should_stop());
  CHECK(perfect.best_epoch() == 0);
  CHECK(perfect.best_score() == 6.0);

  EarlyStopping rising(2);
  for (std::size_t e = 0; e < 10; ++e) rising.observe(e, static_cast<double>(e));
  CHECK_FALSE(rising.should_stop());
  CHECK(rising.best_epoch() == 9);
}

namespace {

struct Toy {
  DirectedGraph graph;
  SplitBundle bundle;
};

Toy toy(std::uint64_t seed, std::size_t nodes = 60, std::size_t edges = 260) {
  Rng rng(seed);
  Toy t{test::random_graph(rng, nodes, edges), {}};
  t.bundle = build_split(t.graph, SplitFractions{}, seed);
  return t;
}

ModelConfig small(ModelKind kind, bool mc_head = false) {
  ModelConfig c;
  c.kind = kind;
  c.hidden_dim = 16;
  c.output_dim = 8;
  if (mc_head) c.head = DecoderHead::MultiClass;
  return c;
}

}  // namespace

TEST_CASE("training lowers the loss and keeps the best parameters") {
  const auto t = toy(1);
  Model m(small(ModelKind::Gravity), t.graph.num_nodes());
  Rng init(2);
  m.initialize(init);
  TrainOptions o;
  o.strategy = Strategy::MultiClass;
  o.epochs = 200;
  o.patience = 1000;
  const auto r = train_run(m, t.bundle, o, Rng(3));
  REQUIRE(r.trace.size() == 201);
  CHECK(r.trace.back().train_losses[0] < r.trace[1].train_losses[0]);
  CHECK(r.stop_reason == "epochs exhausted");
  const auto values = m.params().values();
  CHECK(std::equal(values.begin(), values.end(), r.best_params.begin(), r.best_params.end()));
  CHECK(r.trace[r.best_epoch].val_score == r.best_score);
  for (const auto& rec : r.trace) CHECK(rec.val_score <= r.best_score);
}

TEST_CASE("training is deterministic for a fixed stream") {
  const auto t = toy(4);
  for (auto strategy : {Strategy::Baseline, Strategy::Scalarization, Strategy::MultiObjective}) {
    std::vector<double> scores[2];
    for (int rep = 0; rep < 2; ++rep) {
      Model m(small(ModelKind::Mlp), t.graph.num_nodes());
      Rng init(5);
      m.initialize(init);
      TrainOptions o;
      o.strategy = strategy;
      o.epochs = 15;
      const auto r = train_run(m, t.bundle, o, Rng(6));
      for (const auto& rec : r.trace) scores[rep].push_back(rec.val_score);
    }
    CHECK(scores[0] == scores[1]);
  }
}

TEST_CASE("early stopping ends a run on a plateau") {
  const auto t = toy(7);
  Model m(small(ModelKind::Gae), t.graph.num_nodes());
  Rng init(8);
  m.initialize(init);
  TrainOptions o;
  o.strategy = Strategy::Baseline;
  o.adam.lr = 1e-300;  // parameters never move, so the score is flat
  o.epochs = 50;
  o.patience = 3;
  const auto r = train_run(m, t.bundle, o, Rng(9));
  CHECK(r.stop_reason == "early stop");
  CHECK(r.best_epoch == 0);
  CHECK(r.trace.size() == 5);
}

TEST_CASE("evaluation is pure") {
  const auto t = toy(10);
  Model m(small(ModelKind::SourceTarget), t.graph.num_nodes());
  Rng init(11);
  m.initialize(init);
  const auto a = evaluate(m, t.bundle);
  const Model copy = m;
  const auto b = evaluate(copy, t.bundle);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a[k].roc_auc == b[k].roc_auc);
    CHECK(a[k].auprc == b[k].auprc);
    CHECK((a[k].roc_auc >= 0.0 && a[k].roc_auc <= 1.0));
  }
}

TEST_CASE("GAE scores both directions of a pair identically") {
  const auto t = toy(12);
  Model m(small(ModelKind::Gae), t.graph.num_nodes());
  Rng init(13);
  m.initialize(init);
  CHECK(evaluate(m, t.bundle)[1].roc_auc == 0.5);
}

TEST_CASE("training options are validated") {
  const auto t = toy(14);
  Model m(small(ModelKind::Mlp, true), t.graph.num_nodes());
  TrainOptions o;
  o.strategy = Strategy::Baseline;
  CHECK_THROWS_AS(train_run(m, t.bundle, o, Rng(0)), ConfigError);
  o.strategy = Strategy::MultiClass;
  o.epochs = 0;
  CHECK_THROWS_AS(train_run(m, t.bundle, o, Rng(0)), ConfigError);
}

TEST_CASE("trace CSV has one row per epoch") {
  const auto t = toy(15);
  Model m(small(ModelKind::Gravity), t.graph.num_nodes());
  Rng init(16);
  m.initialize(init);
  TrainOptions o;
  o.strategy = Strategy::MultiObjective;
  o.epochs = 4;
  const auto r = train_run(m, t.bundle, o, Rng(17));
  const auto path = test::temp_dir("trace") / "trace.csv";
  write_trace_csv(r.trace, o.strategy, path.string());
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("epoch,L_G,L_D,L_B,w_G,w_D,w_B,direction_norm", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == r.trace.size());
  // MGDA weights live on the simplex.
  for (std::size_t e = 1; e < r.trace.size(); ++e) {
    const auto& w = r.trace[e].weights;
    REQUIRE(w.size() == 3);
    CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  }
}
