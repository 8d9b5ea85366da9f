#include "dirlink/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace dirlink {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::MultiClass: return "mc";
    case Strategy::Scalarization: return "s";
    case Strategy::MultiObjective: return "mo";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view s) {
  for (auto k : {Strategy::Baseline, Strategy::MultiClass, Strategy::Scalarization, Strategy::MultiObjective}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected baseline, mc, s, mo)");
}

ScoreLoss weighted_bce_from_logits(std::span<const double> logits, std::span<const int> labels, double pos_weight) {
  if (logits.empty()) throw InputError("weighted BCE on an empty batch");
  if (logits.size() != labels.size()) throw InputError("weighted BCE: logits and labels differ in length");
  ScoreLoss out;
  out.grad.resize(logits.size());
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double l = logits[i];
    if (labels[i] == 1) {
      out.loss += pos_weight * softplus(-l);
      out.grad[i] = pos_weight * (sigmoid(l) - 1.0) * inv_n;
    } else {
      out.loss += softplus(l);
      out.grad[i] = sigmoid(l) * inv_n;
    }
  }
  out.loss *= inv_n;
  return out;
}

ScoreLoss loss_weighted_bce(std::span<const double> probs, std::span<const int> labels, double pos_weight) {
  std::vector<double> logits(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p > 0.0 && p < 1.0)) throw InputError("loss_weighted_bce: probabilities must lie in (0, 1)");
    logits[i] = std::log(p) - std::log1p(-p);
  }
  auto out = weighted_bce_from_logits(logits, labels, pos_weight);
  // dl/dp = 1 / (p (1 - p))
  for (std::size_t i = 0; i < probs.size(); ++i) out.grad[i] /= probs[i] * (1.0 - probs[i]);
  return out;
}

ClassWeights class_weights(const ClassCensus& census) {
  const auto n_max = *std::max_element(census.counts.begin(), census.counts.end());
  if (n_max == 0) throw InputError("class_weights: every class is empty");
  ClassWeights w;
  for (std::size_t c = 0; c < 4; ++c) {
    w.w[c] = census.counts[c] == 0 ? 0.0 : static_cast<double>(n_max) / static_cast<double>(census.counts[c]);
  }
  return w;
}

std::array<double, 4> factorize_multiclass(double p_uv, double p_vu) {
  return {(1.0 - p_uv) * (1.0 - p_vu), (1.0 - p_uv) * p_vu, p_uv * (1.0 - p_vu), p_uv * p_vu};
}

MultiClassLoss loss_multiclass(std::span<const std::array<double, 4>> probs, std::span<const EdgeClass> labels,
                               const ClassWeights& weights) {
  if (probs.empty()) throw InputError("multi-class loss on an empty batch");
  if (probs.size() != labels.size()) throw InputError("multi-class loss: probabilities and labels differ in length");
  MultiClassLoss out;
  out.grad.assign(probs.size(), {0.0, 0.0, 0.0, 0.0});
  const double inv_n = 1.0 / static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const double w = weights.w[y];
    double p = probs[i][y];
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      ++out.clamped;
    } else {
      out.grad[i][y] = -w / p * inv_n;
    }
    out.loss -= w * std::log(p);
  }
  out.loss *= inv_n;
  return out;
}

// ---- model-level ---------------------------------------------------------------

namespace {

class DropoutScratch {
 public:
  DropoutScratch(const LossContext& ctx) : ctx_(ctx) {  // NOLINT
    if (active()) mask_.resize(2 * ctx.model.embedding_dim());
  }
  [[nodiscard]] bool active() const { return ctx_.dropout != nullptr && ctx_.model.uses_dropout(); }
  DropoutMask next() {
    if (!active()) return {};
    ctx_.model.sample_dropout(*ctx_.dropout, mask_);
    return mask_;
  }

 private:
  const LossContext& ctx_;
  std::vector<double> mask_;
};

TaskGradient finish(const LossContext& ctx, double loss, std::vector<double> grad, const DenseMatrix& dz) {
  ctx.model.encode_backward(ctx.ops, ctx.enc, dz, grad);
  return {loss, std::move(grad)};
}

}  // namespace

TaskGradient binary_task_loss(const LossContext& ctx, std::span<const Edge> positives,
                              std::span<const Edge> negatives, double pos_weight) {
  const auto& model = ctx.model;
  if (model.multiclass_head()) throw InputError("binary_task_loss: model has a multi-class head");
  const std::size_t n = positives.size() + negatives.size();
  if (n == 0) throw ConfigError("binary task loss on an empty training set");

  DropoutScratch dropout(ctx);
  std::vector<double> logits(n);
  std::vector<int> labels(n);
  std::vector<std::vector<double>> masks;
  if (dropout.active()) masks.reserve(n);
  auto pair_at = [&](std::size_t i) { return i < positives.size() ? positives[i] : negatives[i - positives.size()]; };
  for (std::size_t i = 0; i < n; ++i) {
    auto mask = dropout.next();
    if (dropout.active()) masks.emplace_back(mask.begin(), mask.end());
    logits[i] = model.logit(ctx.enc.z, pair_at(i), mask);
    labels[i] = i < positives.size() ? 1 : 0;
  }
  auto bce = weighted_bce_from_logits(logits, labels, pos_weight);

  std::vector<double> grad(model.params().size(), 0.0);
  DenseMatrix dz(model.num_nodes(), model.embedding_dim());
  for (std::size_t i = 0; i < n; ++i) {
    DropoutMask mask = dropout.active() ? DropoutMask(masks[i]) : DropoutMask{};
    model.logit_backward(ctx.enc.z, pair_at(i), bce.grad[i], dz.view(), grad, mask);
  }
  return finish(ctx, bce.loss, std::move(grad), dz);
}

TaskGradient balanced_task_loss(const LossContext& ctx, const EvalSet& set) {
  if (set.positives.empty()) throw ConfigError("training set has no positives");
  const double pos_weight = static_cast<double>(set.negatives.size()) / static_cast<double>(set.positives.size());
  return binary_task_loss(ctx, set.positives, set.negatives, pos_weight);
}

TaskGradient multiclass_task_loss(const LossContext& ctx, std::span<const LabeledPair> pairs,
                                  const ClassWeights& weights) {
  const auto& model = ctx.model;
  if (pairs.empty()) throw ConfigError("multi-class loss on an empty training set");
  const double inv_n = 1.0 / static_cast<double>(pairs.size());

  std::vector<double> grad(model.params().size(), 0.0);
  DenseMatrix dz(model.num_nodes(), model.embedding_dim());
  double loss = 0.0;
  DropoutScratch dropout(ctx);

  for (const auto& lp : pairs) {
    const auto y = static_cast<std::size_t>(lp.cls);
    const double w = weights.w[y];
    if (model.multiclass_head()) {
      auto mask = dropout.next();
      const auto logits = model.class_logits(ctx.enc.z, lp.pair, mask);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double l : logits) sum += std::exp(l - mx);
      const double lse = mx + std::log(sum);
      loss += w * (lse - logits[y]);
      std::array<double, 4> d{};
      for (std::size_t c = 0; c < 4; ++c) {
        d[c] = w * inv_n * (std::exp(logits[c] - lse) - (c == y ? 1.0 : 0.0));
      }
      model.class_logits_backward(ctx.enc.z, lp.pair, d, dz.view(), grad, mask);
    } else {
      // -ln p^y splits into one term per direction: -ln σ(l) = softplus(-l),
      // -ln(1 - σ(l)) = softplus(l).
      const Edge fwd = lp.pair;
      const Edge bwd = lp.pair.reversed();
      auto mask_f = dropout.next();
      const double l_uv = model.logit(ctx.enc.z, fwd, mask_f);
      std::vector<double> saved_f(mask_f.begin(), mask_f.end());
      auto mask_b = dropout.next();
      const double l_vu = model.logit(ctx.enc.z, bwd, mask_b);
      const bool uv_present = lp.cls == EdgeClass::PU || lp.cls == EdgeClass::PB;
      const bool vu_present = lp.cls == EdgeClass::NU || lp.cls == EdgeClass::PB;
      loss += w * ((uv_present ? softplus(-l_uv) : softplus(l_uv)) + (vu_present ? softplus(-l_vu) : softplus(l_vu)));
      const double d_uv = w * inv_n * (sigmoid(l_uv) - (uv_present ? 1.0 : 0.0));
      const double d_vu = w * inv_n * (sigmoid(l_vu) - (vu_present ? 1.0 : 0.0));
      model.logit_backward(ctx.enc.z, fwd, d_uv, dz.view(), grad, saved_f);
      model.logit_backward(ctx.enc.z, bwd, d_vu, dz.view(), grad, mask_b);
    }
  }
  return finish(ctx, loss * inv_n, std::move(grad), dz);
}

std::vector<std::array<double, 4>> score_classes(const Model& model, const Encoding& enc, std::span<const Edge> pairs) {
  std::vector<std::array<double, 4>> out;
  out.reserve(pairs.size());
  for (const auto& e : pairs) {
    if (model.multiclass_head()) {
      out.push_back(softmax4(model.class_logits(enc.z, e)));
    } else {
      out.push_back(factorize_multiclass(sigmoid(model.logit(enc.z, e)), sigmoid(model.logit(enc.z, e.reversed()))));
    }
  }
  return out;
}

double evaluation_bce(const Model& model, const Encoding& enc, const EvalSet& set) {
  if (set.empty()) return 0.0;
  double loss = 0.0;
  const auto scores = score_edges(model, enc, set.pairs());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    loss -= i < set.positives.size() ? std::log(p) : std::log1p(-p);
  }
  return loss / static_cast<double>(scores.size());
}

TaskLosses task_losses(const LossContext& ctx, const TaskSupervision& sup) {
  TaskLosses out;
  out.general = balanced_task_loss(ctx, sup.general);
  out.directional = balanced_task_loss(ctx, sup.directional);
  out.bidirectional = balanced_task_loss(ctx, sup.bidirectional);
  return out;
}

std::vector<LabeledPair> multiclass_supervision(const SplitBundle& bundle, std::span<const Edge> negatives,
                                                bool include_reverses, bool include_self_loops) {
  const auto& g = bundle.train_graph;
  std::vector<LabeledPair> out;
  std::unordered_set<std::uint64_t> seen;
  auto add = [&](Edge e) {
    const auto k = (static_cast<std::uint64_t>(e.src) << 32) | e.dst;
    if (seen.insert(k).second) out.push_back({e, supervision_class(g, e)});
  };
  for (const auto& e : g.edges()) {
    if (!e.is_loop()) add(e);
  }
  if (include_reverses) {
    for (const auto& e : bundle.train_unidirectional) add(e.reversed());
  }
  for (const auto& e : negatives) add(e);
  if (include_self_loops) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) add({v, v});
  }
  return out;
}

ScalarizationWeights scalarization_weights(const std::optional<std::array<double, 3>>& prev) {
  constexpr double third = 1.0 / 3.0;
  if (!prev) return {third, third, third};
  const double sum = (*prev)[0] + (*prev)[1] + (*prev)[2];
  if (!(sum > 0.0) || !std::isfinite(sum)) return {third, third, third};
  return {(*prev)[0] / sum, (*prev)[1] / sum, (*prev)[2] / sum};
}

// ---- MGDA ------------------------------------------------------------------------

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Weight on the first vector of the min-norm point of segment [a, b], from
// Gram entries aa = <a,a>, ab = <a,b>, bb = <b,b>.
double segment_min_norm(double aa, double ab, double bb) {
  const double denom = aa + bb - 2.0 * ab;
  if (denom <= 0.0) return 0.5;  // a == b: every point is optimal
  return std::clamp((bb - ab) / denom, 0.0, 1.0);
}

using Gram3 = std::array<std::array<double, 3>, 3>;

double quad(const Gram3& m, const std::array<double, 3>& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) s += g[i] * m[i][j] * g[j];
  }
  return s;
}

std::array<double, 3> solve_exact3(const Gram3& m) {
  std::array<double, 3> best{1.0, 0.0, 0.0};
  double best_val = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::array<double, 3>& g) {
    const double v = quad(m, g);
    if (v < best_val) {
      best_val = v;
      best = g;
    }
  };
  for (std::size_t i = 0; i < 3; ++i) {
    std::array<double, 3> g{};
    g[i] = 1.0;
    consider(g);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double t = segment_min_norm(m[i][i], m[i][j], m[j][j]);
      std::array<double, 3> g{};
      g[i] = t;
      g[j] = 1.0 - t;
      consider(g);
    }
  }
  // Interior KKT point: M γ ∝ 1, via the adjugate of M.
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double c11 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
  const double c12 = m[0][1] * m[2][0] - m[0][0] * m[2][1];
  const double c22 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const std::array<double, 3> x{c00 + c01 + c02, c01 + c11 + c12, c02 + c12 + c22};
  const double total = x[0] + x[1] + x[2];
  if (total != 0.0 && std::isfinite(total)) {
    std::array<double, 3> g{x[0] / total, x[1] / total, x[2] / total};
    if (g[0] >= 0.0 && g[1] >= 0.0 && g[2] >= 0.0) consider(g);
  }
  return best;
}

std::array<double, 3> solve_frank_wolfe3(const Gram3& m, std::size_t& iterations) {
  std::array<double, 3> g{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double value = quad(m, g);
  for (iterations = 0; iterations < 100; ++iterations) {
    std::array<double, 3> mg{};
    for (std::size_t i = 0; i < 3; ++i) mg[i] = m[i][0] * g[0] + m[i][1] * g[1] + m[i][2] * g[2];
    const auto t = static_cast<std::size_t>(std::min_element(mg.begin(), mg.end()) - mg.begin());
    // Line search between the current point v and vertex t.
    const double vv = value;
    const double vt = mg[t];
    const double tt = m[t][t];
    const double keep = segment_min_norm(vv, vt, tt);
    std::array<double, 3> next{};
    for (std::size_t i = 0; i < 3; ++i) next[i] = keep * g[i];
    next[t] += 1.0 - keep;
    const double next_value = quad(m, next);
    const double improvement = value - next_value;
    if (improvement <= 0.0) break;
    g = next;
    value = next_value;
    if (improvement < 1e-10) {
      ++iterations;
      break;
    }
  }
  return g;
}

}  // namespace

MgdaSolution mgda_min_norm(std::span<const std::span<const double>> grads, MgdaSolver solver) {
  const std::size_t k = grads.size();
  if (k < 2 || k > 3) throw InputError("mgda_min_norm: expected 2 or 3 gradients");
  const std::size_t dim = grads[0].size();
  if (dim == 0) throw InputError("mgda_min_norm: zero-length gradients");
  for (const auto& g : grads) {
    if (g.size() != dim) throw InputError("mgda_min_norm: gradients differ in length");
  }

  MgdaSolution sol;
  if (k == 2) {
    const double aa = dot(grads[0], grads[0]);
    const double ab = dot(grads[0], grads[1]);
    const double bb = dot(grads[1], grads[1]);
    const double t = segment_min_norm(aa, ab, bb);
    sol.weights = {t, 1.0 - t};
  } else {
    Gram3 m{};
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i; j < 3; ++j) m[i][j] = m[j][i] = dot(grads[i], grads[j]);
    }
    const auto g = solver == MgdaSolver::Exact ? solve_exact3(m) : solve_frank_wolfe3(m, sol.iterations);
    sol.weights.assign(g.begin(), g.end());
  }

  sol.direction.assign(dim, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double w = sol.weights[i];
    for (std::size_t j = 0; j < dim; ++j) sol.direction[j] += w * grads[i][j];
  }
  sol.norm = std::sqrt(dot(sol.direction, sol.direction));
  return sol;
}

MgdaSolution mgda_min_norm(const std::vector<std::vector<double>>& gradients, MgdaSolver solver) {
  std::vector<std::span<const double>> views(gradients.begin(), gradients.end());
  return mgda_min_norm(std::span<const std::span<const double>>(views), solver);
}

StepDirection strategy_step_direction(Strategy strategy, const TaskLosses& losses, const ScalarizationWeights& alpha,
                                      MgdaSolver solver, std::span<const double> preconditioner) {
  StepDirection out;
  const auto& gg = losses.general.grad;
  switch (strategy) {
    case Strategy::Baseline:
      out.direction = gg;
      out.weights = {1.0};
      break;
    case Strategy::Scalarization: {
      // Zero-weight tasks are skipped outright, so α = (1, 0, 0) reproduces
      // ∇L_G bit for bit (adding +0.0 would flip the sign of a -0.0 entry).
      const std::array<const std::vector<double>*, 3> grads{&gg, &losses.directional.grad,
                                                            &losses.bidirectional.grad};
      bool first = true;
      for (std::size_t t = 0; t < 3; ++t) {
        if (alpha[t] == 0.0) continue;
        const auto& g = *grads[t];
        if (g.size() != gg.size()) throw InputError("strategy_step_direction: task gradients differ in length");
        if (first) {
          out.direction.resize(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) out.direction[i] = alpha[t] * g[i];
          first = false;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) out.direction[i] += alpha[t] * g[i];
        }
      }
      if (first) out.direction.assign(gg.size(), 0.0);
      out.weights.assign(alpha.begin(), alpha.end());
      break;
    }
    case Strategy::MultiObjective: {
      std::vector<std::vector<double>> grads{gg, losses.directional.grad, losses.bidirectional.grad};
      if (!preconditioner.empty()) {
        // Weights from preconditioned gradients, applied to the raw ones.
        auto scaled = grads;
        for (auto& g : scaled) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] *= preconditioner[i];
        }
        const auto sol = mgda_min_norm(scaled, solver);
        out.weights = sol.weights;
        out.direction.assign(gg.size(), 0.0);
        for (std::size_t t = 0; t < 3; ++t) {
          for (std::size_t i = 0; i < gg.size(); ++i) out.direction[i] += sol.weights[t] * grads[t][i];
        }
        out.pareto_stationary = sol.norm < kStationaryNorm;
      } else {
        auto sol = mgda_min_norm(grads, solver);
        out.weights = sol.weights;
        out.direction = std::move(sol.direction);
        out.pareto_stationary = sol.norm < kStationaryNorm;
      }
      break;
    }
    case Strategy::MultiClass:
      throw InputError("strategy_step_direction: multi-class uses the single-gradient overload");
  }
  out.norm = std::sqrt(dot(out.direction, out.direction));
  if (strategy == Strategy::MultiObjective && out.norm < kStationaryNorm) out.pareto_stationary = true;
  return out;
}

StepDirection strategy_step_direction(const TaskGradient& multiclass) {
  StepDirection out;
  out.direction = multiclass.grad;
  out.weights = {1.0};
  out.norm = std::sqrt(dot(out.direction, out.direction));
  return out;
}

}  // namespace dirlink
