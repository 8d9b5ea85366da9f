#include "dirlink/gradcheck.hpp"

#include <unordered_set>

#include "dirlink/trainer.hpp"

namespace dirlink {

DirectedGraph random_digraph(std::size_t nodes, std::size_t unidirectional, std::size_t bidirectional, Rng& rng) {
  const std::size_t max_pairs = nodes * (nodes - 1) / 2;
  if (nodes < 2 || unidirectional + bidirectional > max_pairs) {
    throw ConfigError("random_digraph: too many edges for the node count");
  }
  std::unordered_set<std::uint64_t> used;
  std::vector<Edge> edges;
  auto draw_pair = [&]() {
    for (;;) {
      const auto u = static_cast<NodeId>(rng.index(nodes));
      const auto v = static_cast<NodeId>(rng.index(nodes));
      if (u == v) continue;
      const auto key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
      if (used.insert(key).second) return Edge{u, v};
    }
  };
  for (std::size_t i = 0; i < unidirectional; ++i) edges.push_back(draw_pair());
  for (std::size_t i = 0; i < bidirectional; ++i) {
    const Edge e = draw_pair();
    edges.push_back(e);
    edges.push_back(e.reversed());
  }
  return DirectedGraph(nodes, edges);
}

std::vector<GradCheckResult> gradcheck(ModelKind kind, Strategy strategy, const DirectedGraph& graph,
                                       std::uint64_t seed, const GradCheckSetup& setup) {
  const Rng master(seed);
  const auto bundle = build_split(graph, SplitFractions{}, master.fork("split").seed());
  const auto ops = GraphOperators::build(bundle.train_graph);

  ModelConfig mc;
  mc.kind = kind;
  mc.hidden_dim = setup.hidden_dim;
  mc.output_dim = setup.output_dim;
  mc.head = kind == ModelKind::Mlp && strategy == Strategy::MultiClass ? DecoderHead::MultiClass : DecoderHead::Binary;
  Model base(mc, graph.num_nodes());
  Rng init = master.fork("init");
  base.initialize(init);

  Rng neg_rng = master.fork("negatives");
  const auto negatives = sample_absent_pairs(bundle.train_graph, bundle.train_graph.num_edges(), neg_rng);
  const Rng dropout_seed = master.fork("dropout");
  const auto sup = binary_supervision(bundle, negatives, true);
  const auto mc_pairs = multiclass_supervision(bundle, negatives, true, true);
  ClassCensus census;
  for (const auto& lp : mc_pairs) ++census.counts[static_cast<std::size_t>(lp.cls)];
  const auto weights = class_weights(census);

  // All task losses at θ, with the dropout stream replayed from the same seed.
  auto evaluate_at = [&](std::span<const double> theta) {
    Model m = base;
    std::copy(theta.begin(), theta.end(), m.params().values().begin());
    const auto enc = m.encode(ops);
    Rng dropout = dropout_seed;
    const LossContext ctx{m, ops, enc, &dropout};
    std::vector<TaskGradient> out;
    if (strategy == Strategy::MultiClass) {
      out.push_back(multiclass_task_loss(ctx, mc_pairs, weights));
    } else if (strategy == Strategy::Baseline) {
      out.push_back(balanced_task_loss(ctx, sup.general));
    } else {
      auto l = task_losses(ctx, sup);
      out = {std::move(l.general), std::move(l.directional), std::move(l.bidirectional)};
    }
    return out;
  };

  const std::vector<double> theta0(base.params().values().begin(), base.params().values().end());
  const auto at0 = evaluate_at(theta0);
  std::vector<std::string> names;
  if (strategy == Strategy::MultiClass) {
    names = {"L_MC"};
  } else if (strategy == Strategy::Baseline) {
    names = {"L_G"};
  } else {
    names = {"L_G", "L_D", "L_B"};
  }

  std::vector<GradCheckResult> results;
  Rng coords = master.fork("gradcheck");
  for (std::size_t t = 0; t < at0.size(); ++t) {
    auto f = [&, t](std::span<const double> theta) { return evaluate_at(theta)[t].loss; };
    results.push_back({names[t], finite_diff_check(f, theta0, at0[t].grad, setup.fd, coords)});
  }

  if (strategy == Strategy::Scalarization || strategy == Strategy::MultiObjective) {
    std::vector<double> w(setup.alpha.begin(), setup.alpha.end());
    std::vector<double> analytic;
    if (strategy == Strategy::MultiObjective) {
      const auto sol = mgda_min_norm(std::vector<std::vector<double>>{at0[0].grad, at0[1].grad, at0[2].grad});
      w = sol.weights;
      analytic = sol.direction;
    } else {
      TaskLosses tl{at0[0], at0[1], at0[2]};
      analytic = strategy_step_direction(strategy, tl, setup.alpha).direction;
    }
    auto f = [&](std::span<const double> theta) {
      const auto l = evaluate_at(theta);
      return w[0] * l[0].loss + w[1] * l[1].loss + w[2] * l[2].loss;
    };
    results.push_back({strategy == Strategy::MultiObjective ? "MO" : "S",
                       finite_diff_check(f, theta0, analytic, setup.fd, coords)});
  }
  return results;
}

}  // namespace dirlink
