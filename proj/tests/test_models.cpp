#include <doctest.h>

#include <cmath>

#include "dirlink/models.hpp"
#include "helpers.hpp"

using namespace dirlink;

namespace {

constexpr double kSigmoidOne = 0.7310585786300049;

ModelConfig config(ModelKind kind, std::size_t hidden, std::size_t out) {
  ModelConfig c;
  c.kind = kind;
  c.hidden_dim = hidden;
  c.output_dim = out;
  return c;
}

void set_identity(Model& m, const std::string& name) {
  auto w = m.params().view(m.params().find(name));
  for (std::size_t i = 0; i < w.size(); ++i) w.data[i] = 0.0;
  for (std::size_t i = 0; i < std::min(w.rows, w.cols); ++i) w(i, i) = 1.0;
}

DenseMatrix dense_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
    }
  }
  return out;
}

DenseMatrix dense_transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

DenseMatrix relu(DenseMatrix m) {
  for (auto& x : m.data()) x = std::max(x, 0.0);
  return m;
}

DenseMatrix segment(const Model& m, const std::string& name) {
  const auto v = m.params().view(m.params().find(name));
  return DenseMatrix(v.rows, v.cols, std::vector<double>(v.data, v.data + v.size()));
}

}  // namespace

TEST_CASE("encoder on the two-node example") {
  // Edge (0,1) plus self-loops: P = [[0.5,0.5],[0,1]], and with identity
  // weights and activation Z = P^2.
  const std::vector<Edge> e{{0, 1}};
  const auto ops = GraphOperators::build(DirectedGraph(2, e));
  auto c = config(ModelKind::Gae, 2, 2);
  c.activation = Activation::Identity;
  Model m(c, 2);
  set_identity(m, "enc.W0");
  set_identity(m, "enc.W1");
  const auto z = m.encode(ops).z;
  CHECK(z == DenseMatrix::from_rows({{0.25, 0.75}, {0.0, 1.0}}));
}

TEST_CASE("encoder corner cases") {
  Rng rng(1);
  Model m(config(ModelKind::Gae, 4, 3), 5);
  const auto ops = GraphOperators::build(DirectedGraph(5, {}));
  CHECK(m.encode(ops).z == DenseMatrix(5, 3));  // W = 0

  // Edgeless graph: P = I, so Z = relu(W0) W1.
  m.initialize(rng);
  const auto expect = dense_product(relu(segment(m, "enc.W0")), segment(m, "enc.W1"));
  const auto z = m.encode(ops).z;
  for (std::size_t i = 0; i < z.data().size(); ++i) CHECK(z.data()[i] == doctest::Approx(expect.data()[i]));

  CHECK_THROWS_AS((void)m.encode(GraphOperators::build(DirectedGraph(4, {}))), InputError);
}

TEST_CASE("standard encoder matches the dense formula") {
  Rng rng(2);
  const auto g = test::random_graph(rng, 18, 50);
  const auto ops = GraphOperators::build(g);
  Model m(config(ModelKind::Gravity, 6, 4), g.num_nodes());
  m.initialize(rng);
  const auto p = ops.normalized.to_dense();
  const auto expect = dense_product(dense_product(p, relu(dense_product(p, segment(m, "enc.W0")))), segment(m, "enc.W1"));
  const auto z = m.encode(ops).z;
  for (std::size_t i = 0; i < z.data().size(); ++i) CHECK(z.data()[i] == doctest::Approx(expect.data()[i]).epsilon(1e-12));
}

TEST_CASE("DiGAE encoder matches the dense formula and swaps under transposition") {
  Rng rng(3);
  const auto g = test::random_graph(rng, 16, 48);
  const auto ops = GraphOperators::build(g);
  Model m(config(ModelKind::Digae, 5, 6), g.num_nodes());
  m.initialize(rng);
  const auto a = ops.adjacency.to_dense();
  const auto at = dense_transpose(a);
  const auto zs = dense_product(dense_product(a, relu(dense_product(at, segment(m, "enc.S.W0")))), segment(m, "enc.S.W1"));
  const auto zt = dense_product(dense_product(at, relu(dense_product(a, segment(m, "enc.T.W0")))), segment(m, "enc.T.W1"));
  const auto z = m.encode(ops).z;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(z(r, c) == doctest::Approx(zs(r, c)).epsilon(1e-12));
      CHECK(z(r, 3 + c) == doctest::Approx(zt(r, c)).epsilon(1e-12));
    }
  }

  // With S and T weights equal, encoding the transposed graph swaps the halves.
  for (const char* w : {"W0", "W1"}) {
    const auto src = m.params().view(m.params().find(std::string("enc.S.") + w));
    auto dst = m.params().view(m.params().find(std::string("enc.T.") + w));
    std::copy_n(src.data, src.size(), dst.data);
  }
  std::vector<Edge> flipped;
  for (const auto& e : g.edges()) flipped.push_back(e.reversed());
  const auto z1 = m.encode(ops).z;
  const auto z2 = m.encode(GraphOperators::build(DirectedGraph(g.num_nodes(), flipped))).z;
  for (std::size_t r = 0; r < z1.rows(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(z2(r, c) == doctest::Approx(z1(r, 3 + c)).epsilon(1e-12));
      CHECK(z2(r, 3 + c) == doctest::Approx(z1(r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("DiGAE single self-looped node scores sigma(1)") {
  auto c = config(ModelKind::Digae, 1, 2);
  c.activation = Activation::Identity;
  Model m(c, 1);
  for (const char* name : {"enc.S.W0", "enc.S.W1", "enc.T.W0", "enc.T.W1"}) set_identity(m, name);
  const std::vector<Edge> pair{{0, 0}};
  const auto p = score_edges(m, GraphOperators::build(DirectedGraph(1, {})), pair);
  CHECK(p[0] == doctest::Approx(kSigmoidOne).epsilon(1e-15));
}

TEST_CASE("inner-product decoder") {
  Model m(config(ModelKind::Gae, 2, 3), 3);
  const auto z = DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {1, 0, 0}});
  CHECK(sigmoid(m.logit(z, {0, 1})) == 0.5);
  CHECK(sigmoid(m.logit(z, {0, 2})) == doctest::Approx(kSigmoidOne));
  Rng rng(4);
  DenseMatrix r(6, 3);
  for (auto& x : r.data()) x = rng.uniform(-3, 3);
  for (NodeId u = 0; u < 6; ++u) {
    for (NodeId v = 0; v < 6; ++v) CHECK(m.logit(r, {u, v}) == m.logit(r, {v, u}));
  }
}

TEST_CASE("source/target decoder splits the embedding") {
  Model m(config(ModelKind::SourceTarget, 2, 4), 2);
  const auto z = DenseMatrix::from_rows({{1, 0, 0, 0}, {0, 0, 1, 0}});
  CHECK(sigmoid(m.logit(z, {0, 1})) == 0.5);
  CHECK(sigmoid(m.logit(z, {1, 0})) == doctest::Approx(kSigmoidOne));
  CHECK(sigmoid(m.logit(DenseMatrix(2, 4), {0, 1})) == 0.5);
}

TEST_CASE("gravity decoder") {
  Model m(config(ModelKind::Gravity, 2, 3), 2);
  CHECK(m.lambda() == doctest::Approx(1.0));
  // z_v[0] = 0, squared distance 1 -> logit 0.
  CHECK(m.logit(DenseMatrix::from_rows({{5, 0, 0}, {0, 1, 0}}), {0, 1}) == doctest::Approx(0.0));
  // z_v[0] = 2, squared distance e -> logit 1.
  const double d = std::sqrt(std::exp(1.0));
  CHECK(m.logit(DenseMatrix::from_rows({{0, 0, 0}, {2, d, 0}}), {0, 1}) == doctest::Approx(1.0));
  // Masses differ, distance is shared: p(u,v) != p(v,u).
  const auto z = DenseMatrix::from_rows({{1, 0, 0}, {3, 1, 1}});
  CHECK(m.logit(z, {0, 1}) - m.logit(z, {1, 0}) == doctest::Approx(2.0));
  // Coincident embeddings hit the distance floor instead of -log(0).
  CHECK(std::isfinite(m.logit(DenseMatrix::from_rows({{0, 1, 1}, {0, 1, 1}}), {0, 1})));

  auto c = config(ModelKind::Gravity, 2, 3);
  c.initial_lambda = 0.1;
  CHECK(Model(c, 2).lambda() == doctest::Approx(0.1));
}

TEST_CASE("MLP decoder") {
  Model m(config(ModelKind::Mlp, 2, 3), 2);
  const auto z = DenseMatrix::from_rows({{2, 5, 7}, {1, 1, 1}});
  CHECK(m.logit(z, {0, 1}) == 0.0);
  auto w = m.params().view(m.params().find("dec.mlp.W"));
  w(0, 0) = 1.0;  // picks z_u[0]
  CHECK(m.logit(z, {0, 1}) == 2.0);
  CHECK(m.logit(z, {1, 0}) == 1.0);

  auto mc = config(ModelKind::Mlp, 2, 3);
  mc.head = DecoderHead::MultiClass;
  Model m4(mc, 2);
  const auto probs = softmax4(m4.class_logits(z, {0, 1}));
  for (double p : probs) CHECK(p == 0.25);
  CHECK_THROWS_AS((void)m4.logit(z, {0, 1}), InputError);
  CHECK_THROWS_AS((void)m.class_logits(z, {0, 1}), InputError);
}

TEST_CASE("dropout masks are inverted and reproducible") {
  Model m(config(ModelKind::Mlp, 2, 8), 2);
  std::vector<double> a(16), b(16);
  Rng r1(5), r2(5);
  m.sample_dropout(r1, a);
  m.sample_dropout(r2, b);
  CHECK(a == b);
  for (double x : a) CHECK((x == 0.0 || x == 2.0));
}

TEST_CASE("asymmetric decoders separate (u,v) from (v,u)") {
  Rng rng(6);
  const auto g = test::random_graph(rng, 10, 24);
  const auto ops = GraphOperators::build(g);
  for (auto kind : {ModelKind::Gravity, ModelKind::SourceTarget, ModelKind::Mlp, ModelKind::Digae}) {
    Model m(config(kind, 8, 4), g.num_nodes());
    m.initialize(rng);
    const std::vector<Edge> fwd{{0, 1}, {2, 3}, {4, 5}};
    const std::vector<Edge> bwd{{1, 0}, {3, 2}, {5, 4}};
    const auto pf = score_edges(m, ops, fwd);
    const auto pb = score_edges(m, ops, bwd);
    bool differs = false;
    for (std::size_t i = 0; i < pf.size(); ++i) differs = differs || pf[i] != pb[i];
    CHECK_MESSAGE(differs, to_string(kind));
  }
}

TEST_CASE("scores are probabilities and the multi-class score is P(pu)+P(pb)") {
  Rng rng(7);
  const auto g = test::random_graph(rng, 12, 30);
  const auto ops = GraphOperators::build(g);
  std::vector<Edge> pairs;
  for (NodeId u = 0; u < 12; ++u) pairs.push_back({u, static_cast<NodeId>((u + 5) % 12)});
  pairs.push_back(pairs.front());

  for (auto kind : {ModelKind::Gae, ModelKind::Gravity, ModelKind::SourceTarget, ModelKind::Mlp, ModelKind::Digae}) {
    Model m(config(kind, 8, 4), 12);
    m.initialize(rng);
    const auto s = score_edges(m, ops, pairs);
    for (double p : s) CHECK((p > 0.0 && p < 1.0));
    CHECK(s.front() == s.back());
    CHECK(score_edges(m, ops, {}).empty());
  }

  auto c = config(ModelKind::Mlp, 8, 4);
  c.head = DecoderHead::MultiClass;
  Model m(c, 12);
  m.initialize(rng);
  const auto enc = m.encode(ops);
  const auto s = score_edges(m, enc, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto p = softmax4(m.class_logits(enc.z, pairs[i]));
    CHECK(p[0] + p[1] + p[2] + p[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s[i] == doctest::Approx(p[2] + p[3]).epsilon(1e-15));
  }
}

TEST_CASE("model configuration is validated") {
  CHECK_THROWS_AS(Model(config(ModelKind::SourceTarget, 4, 3), 5), ConfigError);
  CHECK_THROWS_AS(Model(config(ModelKind::Digae, 4, 5), 5), ConfigError);
  CHECK_THROWS_AS(Model(config(ModelKind::Gravity, 4, 1), 5), ConfigError);
  CHECK_THROWS_AS(Model(config(ModelKind::Gae, 0, 4), 5), ConfigError);
  auto c = config(ModelKind::Gravity, 4, 4);
  c.head = DecoderHead::MultiClass;
  CHECK_THROWS_AS(Model(c, 5), ConfigError);
  CHECK_THROWS_AS(model_kind_from_string("magnet"), ConfigError);
  for (auto k : {ModelKind::Gae, ModelKind::Gravity, ModelKind::SourceTarget, ModelKind::Mlp, ModelKind::Digae}) {
    CHECK(model_kind_from_string(to_string(k)) == k);
  }
}

TEST_CASE("checkpoints round-trip") {
  Rng rng(8);
  const auto g = test::random_graph(rng, 10, 24);
  const auto ops = GraphOperators::build(g);
  auto c = config(ModelKind::Gravity, 5, 4);
  c.initial_lambda = 0.3;
  Model m(c, 10);
  m.initialize(rng);
  const auto dir = test::temp_dir("checkpoint");
  save_checkpoint(m, dir / "model.json");
  const auto back = load_checkpoint(dir / "model.json");
  CHECK(back.kind() == ModelKind::Gravity);
  CHECK(back.config().initial_lambda == doctest::Approx(0.3));
  const auto a = m.params().values();
  const auto b = back.params().values();
  CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  const std::vector<Edge> pairs{{0, 1}, {3, 2}};
  CHECK(score_edges(m, ops, pairs) == score_edges(back, ops, pairs));
}
