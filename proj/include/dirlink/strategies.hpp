#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dirlink/graph.hpp"
#include "dirlink/models.hpp"
#include "dirlink/rng.hpp"
#include "dirlink/split.hpp"

namespace dirlink {

enum class Strategy { Baseline, MultiClass, Scalarization, MultiObjective };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

// ---- probability-level losses --------------------------------------------------

struct ScoreLoss {
  double loss{0.0};
  std::vector<double> grad;  // d loss / d input, one per sample
};

/*
 * Mean over samples of -[w y ln σ(l) + (1 - y) ln(1 - σ(l))], evaluated as
 * w y softplus(-l) + (1 - y) softplus(l). Throws InputError on an empty batch.
 */
ScoreLoss weighted_bce_from_logits(std::span<const double> logits, std::span<const int> labels, double pos_weight);

/// Same loss on probabilities in (0, 1); gradient is with respect to the probabilities.
ScoreLoss loss_weighted_bce(std::span<const double> probs, std::span<const int> labels, double pos_weight);

struct ClassWeights {
  std::array<double, 4> w{};

  double operator[](EdgeClass c) const { return w[static_cast<std::size_t>(c)]; }
};

/// w_c = n_max / n_c; empty classes get weight 0. Throws InputError if all empty.
ClassWeights class_weights(const ClassCensus& census);

/// [(1-p)(1-q), (1-p)q, p(1-q), pq] for p = P(u,v), q = P(v,u).
std::array<double, 4> factorize_multiclass(double p_uv, double p_vu);

struct MultiClassLoss {
  double loss{0.0};
  std::vector<std::array<double, 4>> grad;  // d loss / d probability rows
  std::size_t clamped{0};                   // true-class probabilities floored at kProbabilityFloor
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over pairs of -w_y ln p^y.
MultiClassLoss loss_multiclass(std::span<const std::array<double, 4>> probs, std::span<const EdgeClass> labels,
                               const ClassWeights& weights);

// ---- model-level losses with parameter gradients ------------------------------

struct TaskGradient {
  double loss{0.0};
  std::vector<double> grad;
};

struct LossContext {
  const Model& model;
  const GraphOperators& ops;
  const Encoding& enc;
  Rng* dropout{nullptr};  // null: dropout disabled
};

/// Weighted BCE over labelled pairs, gradient with respect to every parameter.
TaskGradient binary_task_loss(const LossContext& ctx, std::span<const Edge> positives,
                              std::span<const Edge> negatives, double pos_weight);

/// pos_weight = n_neg / n_pos.
TaskGradient balanced_task_loss(const LossContext& ctx, const EvalSet& set);

/*
 * Weighted multi-class cross-entropy. Single-logit decoders go through the
 * independence factorization of σ(l_uv), σ(l_vu); the multi-class MLP head
 * uses a softmax over its four logits.
 */
TaskGradient multiclass_task_loss(const LossContext& ctx, std::span<const LabeledPair> pairs,
                                  const ClassWeights& weights);

/// Four-class probability rows (nb, nu, pu, pb).
std::vector<std::array<double, 4>> score_classes(const Model& model, const Encoding& enc, std::span<const Edge> pairs);

/// Mean unweighted BCE of the model on a balanced set; no gradient.
double evaluation_bce(const Model& model, const Encoding& enc, const EvalSet& set);

struct TaskLosses {
  TaskGradient general;
  TaskGradient directional;
  TaskGradient bidirectional;
};

struct TaskSupervision {
  EvalSet general;   // rebalanced by n_neg / n_pos
  EvalSet directional;
  EvalSet bidirectional;
};

/// L_G, L_D, L_B and one gradient each. Throws ConfigError on an empty set.
TaskLosses task_losses(const LossContext& ctx, const TaskSupervision& sup);

/*
 * MC supervision pairs, labelled against the training graph: every training
 * edge, the reverse of every remaining unidirectional edge, the sampled
 * absent pairs, and (optionally) each node's self-loop as NB.
 */
std::vector<LabeledPair> multiclass_supervision(const SplitBundle& bundle, std::span<const Edge> negatives,
                                                bool include_reverses, bool include_self_loops);

// ---- combination rules ---------------------------------------------------------

using ScalarizationWeights = std::array<double, 3>;

/// α_i = ℓ_i / Σℓ; uniform when no previous losses exist or Σℓ = 0.
ScalarizationWeights scalarization_weights(const std::optional<std::array<double, 3>>& prev_val_losses);

struct MgdaSolution {
  std::vector<double> weights;
  std::vector<double> direction;
  double norm{0.0};
  std::size_t iterations{0};
};

enum class MgdaSolver { Exact, FrankWolfe };

/*
 * Minimum-norm point of the convex hull of 2 or 3 gradients. Two gradients use
 * the closed form; three are solved over the 3x3 Gram matrix, either exactly
 * (best of vertex, edge and interior KKT candidates) or by Frank-Wolfe.
 */
MgdaSolution mgda_min_norm(std::span<const std::span<const double>> gradients, MgdaSolver solver = MgdaSolver::Exact);
MgdaSolution mgda_min_norm(const std::vector<std::vector<double>>& gradients, MgdaSolver solver = MgdaSolver::Exact);

inline constexpr double kStationaryNorm = 1e-12;

struct StepDirection {
  std::vector<double> direction;
  std::vector<double> weights;  // α for S, γ for MO, {1} otherwise
  double norm{0.0};
  bool pareto_stationary{false};
};

/// Baseline -> ∇L_G; S -> Σ α_i ∇L_i; MO -> MGDA direction.
StepDirection strategy_step_direction(Strategy strategy, const TaskLosses& losses, const ScalarizationWeights& alpha,
                                      MgdaSolver solver = MgdaSolver::Exact,
                                      std::span<const double> preconditioner = {});

/// MC -> ∇L_MC.
StepDirection strategy_step_direction(const TaskGradient& multiclass);

}  // namespace dirlink
