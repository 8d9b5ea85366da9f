#include "dirlink/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dirlink {

Adam::Adam(std::size_t size, AdamOptions opts) : opts_(opts), m_(size, 0.0), v_(size, 0.0) {
  if (!(opts.lr > 0.0)) throw ConfigError("Adam: learning rate must be positive");
}

void Adam::step(std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) throw InputError("Adam: size mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream msg;
      msg << "non-finite gradient at coordinate " << i << " (step " << steps_ + 1 << ")";
      throw DivergenceError(msg.str());
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(opts_.beta1, t);
  const double c2 = 1.0 - std::pow(opts_.beta2, t);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i] + opts_.weight_decay * theta[i];
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    theta[i] -= opts_.lr * m_hat / (std::sqrt(v_hat) + opts_.eps);
  }
}

std::vector<double> Adam::preconditioner() const {
  std::vector<double> out(v_.size(), 1.0);
  if (steps_ == 0) return out;
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < v_.size(); ++i) out[i] = 1.0 / (std::sqrt(v_[i] / c2) + opts_.eps);
  return out;
}

bool EarlyStopping::observe(std::size_t epoch, double score) {
  if (score > best_score_) {
    best_score_ = score;
    best_epoch_ = epoch;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

TaskSupervision binary_supervision(const SplitBundle& bundle, std::vector<Edge> general_negatives,
                                   bool self_loop_positives) {
  TaskSupervision sup;
  const auto& edges = bundle.train_graph.edges();
  sup.general.positives.assign(edges.begin(), edges.end());
  if (self_loop_positives) {
    for (NodeId v = 0; v < bundle.train_graph.num_nodes(); ++v) sup.general.positives.push_back({v, v});
  }
  sup.general.negatives = std::move(general_negatives);
  sup.directional = bundle.directional.train;
  sup.bidirectional = bundle.bidirectional.train;
  return sup;
}

namespace {

TaskMetrics metrics_on(const Model& model, const Encoding& enc, const EvalSet& set) {
  const auto scores = score_edges(model, enc, set.pairs());
  return task_metrics(scores, set.labels());
}

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

EpochRecord validation_record(const Model& model, const Encoding& enc, const SplitBundle& bundle) {
  EpochRecord rec;
  const std::array<const TaskSets*, 3> tasks{&bundle.general, &bundle.directional, &bundle.bidirectional};
  for (std::size_t t = 0; t < 3; ++t) {
    rec.val[t] = metrics_on(model, enc, tasks[t]->val);
    rec.val_losses[t] = evaluation_bce(model, enc, tasks[t]->val);
  }
  return rec;
}

std::array<TaskMetrics, 3> evaluate(const Model& model, const SplitBundle& bundle) {
  const auto ops = GraphOperators::build(bundle.train_graph);
  const auto enc = model.encode(ops);
  return {metrics_on(model, enc, bundle.general.test), metrics_on(model, enc, bundle.directional.test),
          metrics_on(model, enc, bundle.bidirectional.test)};
}

TrainResult train_run(Model& model, const SplitBundle& bundle, const TrainOptions& opts, const Rng& rng) {
  if (opts.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (opts.patience < 1) throw ConfigError("patience must be at least 1");
  if (opts.negative_ratio < 1) throw ConfigError("negative ratio must be at least 1");
  const bool multiclass = opts.strategy == Strategy::MultiClass;
  if (model.multiclass_head() && !multiclass) throw ConfigError("a multi-class head needs the mc strategy");

  const auto ops = GraphOperators::build(bundle.train_graph);
  Rng negatives_rng = rng.fork("negatives");
  // One dropout stream per task, so L_G draws the same masks whether or not
  // L_D and L_B are computed alongside it.
  Rng dropout_rng = rng.fork("dropout");
  Rng dropout_d_rng = rng.fork("dropout.directional");
  Rng dropout_b_rng = rng.fork("dropout.bidirectional");
  Adam adam(model.params().size(), opts.adam);
  const auto theta = model.params().values();

  const std::size_t n_neg = opts.negative_ratio * bundle.train_graph.num_edges();
  std::vector<Edge> fixed_negatives;
  if (opts.full_negatives) {
    fixed_negatives = enumerate_absent_pairs(bundle.train_graph);
  } else if (!opts.resample_negatives) {
    fixed_negatives = sample_absent_pairs(bundle.train_graph, n_neg, negatives_rng);
  }
  auto epoch_negatives = [&]() {
    if (opts.full_negatives || !opts.resample_negatives) return fixed_negatives;
    return sample_absent_pairs(bundle.train_graph, n_neg, negatives_rng);
  };

  TrainResult result;
  auto score_epoch = [&](EpochRecord rec) {
    const auto enc = model.encode(ops);
    auto val = validation_record(model, enc, bundle);
    rec.val = val.val;
    rec.val_losses = val.val_losses;
    const ValidationMetrics vm{rec.val[0], rec.val[1], rec.val[2]};
    rec.val_score = early_stop_score(vm, opts.strategy == Strategy::Baseline);
    result.trace.push_back(std::move(rec));
    return result.trace.back().val_score;
  };

  EarlyStopping stopper(opts.patience);
  stopper.observe(0, score_epoch(EpochRecord{}));
  result.best_params.assign(theta.begin(), theta.end());

  std::optional<std::array<double, 3>> prev_val_losses;
  result.stop_reason = "epochs exhausted";
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    StepDirection step;
    const auto enc = model.encode(ops);
    const LossContext ctx{model, ops, enc, &dropout_rng};
    if (multiclass) {
      const auto negs = epoch_negatives();
      const auto pairs =
          multiclass_supervision(bundle, negs, opts.mc_include_reverses, opts.self_loop_supervision);
      ClassCensus census;
      for (const auto& lp : pairs) ++census.counts[static_cast<std::size_t>(lp.cls)];
      const auto mc = multiclass_task_loss(ctx, pairs, class_weights(census));
      rec.train_losses = {mc.loss};
      step = strategy_step_direction(mc);
    } else {
      const auto sup = binary_supervision(bundle, epoch_negatives(), opts.self_loop_supervision);
      TaskLosses losses;
      losses.general = balanced_task_loss(ctx, sup.general);
      if (opts.strategy == Strategy::Baseline) {
        rec.train_losses = {losses.general.loss};
      } else {
        losses.directional = balanced_task_loss({model, ops, enc, &dropout_d_rng}, sup.directional);
        losses.bidirectional = balanced_task_loss({model, ops, enc, &dropout_b_rng}, sup.bidirectional);
        rec.train_losses = {losses.general.loss, losses.directional.loss, losses.bidirectional.loss};
      }
      const auto alpha = opts.fixed_alpha ? *opts.fixed_alpha : scalarization_weights(prev_val_losses);
      std::vector<double> precond;
      if (opts.strategy == Strategy::MultiObjective && opts.mgda_preconditioned) precond = adam.preconditioner();
      step = strategy_step_direction(opts.strategy, losses, alpha, opts.mgda_solver, precond);
    }
    rec.weights = step.weights;
    rec.direction_norm = step.norm;

    if (!finite_all(rec.train_losses)) {
      result.trace.push_back(std::move(rec));
      result.stop_reason = "diverged: non-finite training loss at epoch " + std::to_string(epoch);
      break;
    }
    try {
      adam.step(theta, step.direction);
    } catch (const DivergenceError& e) {
      result.trace.push_back(std::move(rec));
      result.stop_reason = std::string("diverged: ") + e.what();
      break;
    }

    const double score = score_epoch(std::move(rec));
    prev_val_losses = result.trace.back().val_losses;
    if (stopper.observe(epoch, score)) result.best_params.assign(theta.begin(), theta.end());
    if (stopper.should_stop()) {
      result.stop_reason = "early stop";
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_score = stopper.best_score();
  std::copy(result.best_params.begin(), result.best_params.end(), theta.begin());
  return result;
}

void write_trace_csv(const std::vector<EpochRecord>& trace, Strategy strategy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace " + path);
  out.precision(17);
  const bool mc = strategy == Strategy::MultiClass;
  const bool single = mc || strategy == Strategy::Baseline;
  out << "epoch";
  if (mc) {
    out << ",L_MC";
  } else if (single) {
    out << ",L_G";
  } else {
    out << ",L_G,L_D,L_B,w_G,w_D,w_B";
  }
  out << ",direction_norm,val_general_roc_auc,val_general_auprc,val_directional_roc_auc,"
         "val_directional_auprc,val_bidirectional_roc_auc,val_bidirectional_auprc,val_score\n";
  const std::size_t n_losses = single ? 1 : 3;
  for (const auto& r : trace) {
    out << r.epoch;
    for (std::size_t i = 0; i < n_losses; ++i) {
      out << ',';
      if (i < r.train_losses.size()) out << r.train_losses[i];
    }
    if (!single) {
      for (std::size_t i = 0; i < 3; ++i) {
        out << ',';
        if (i < r.weights.size()) out << r.weights[i];
      }
    }
    out << ',' << r.direction_norm;
    for (const auto& m : r.val) out << ',' << m.roc_auc << ',' << m.auprc;
    out << ',' << r.val_score << '\n';
  }
}

}  // namespace dirlink
