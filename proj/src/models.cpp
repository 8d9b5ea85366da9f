#include "dirlink/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace dirlink {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Gae: return "gae";
    case ModelKind::Gravity: return "gravity";
    case ModelKind::SourceTarget: return "st";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Digae: return "digae";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  for (auto k : {ModelKind::Gae, ModelKind::Gravity, ModelKind::SourceTarget, ModelKind::Mlp, ModelKind::Digae}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown model '" + std::string(s) + "' (expected gae, gravity, st, mlp, digae)");
}

void ModelConfig::validate() const {
  if (hidden_dim == 0 || output_dim == 0) throw ConfigError("hidden and output dimensions must be positive");
  if ((kind == ModelKind::SourceTarget || kind == ModelKind::Digae) && output_dim % 2 != 0) {
    throw ConfigError("source/target decoders need an even output dimension, got " + std::to_string(output_dim));
  }
  if (kind == ModelKind::Gravity && output_dim < 2) throw ConfigError("gravity decoder needs output dimension >= 2");
  if (kind == ModelKind::Gravity && !(initial_lambda > 0.0)) throw ConfigError("initial lambda must be positive");
  if (head == DecoderHead::MultiClass && kind != ModelKind::Mlp) {
    throw ConfigError("only the MLP decoder has a multi-class head");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

GraphOperators GraphOperators::build(const DirectedGraph& g) {
  GraphOperators ops;
  ops.num_nodes = g.num_nodes();
  ops.adjacency = SparseMatrix::adjacency(with_self_loops(g));
  ops.adjacency_t = ops.adjacency.transpose();
  ops.normalized = out_degree_normalize(ops.adjacency);
  ops.normalized_t = ops.normalized.transpose();
  return ops;
}

Model::Model(ModelConfig config, std::size_t num_nodes) : config_(config), num_nodes_(num_nodes) {
  config_.validate();
  const std::size_t h = config_.hidden_dim;
  const std::size_t l = config_.output_dim;
  if (config_.kind == ModelKind::Digae) {
    const auto s0 = params_.add("enc.S.W0", num_nodes, h);
    const auto s1 = params_.add("enc.S.W1", h, l / 2);
    const auto t0 = params_.add("enc.T.W0", num_nodes, h);
    const auto t1 = params_.add("enc.T.W1", h, l / 2);
    branches_.push_back({s0, s1, 0, Flow::Source});
    branches_.push_back({t0, t1, l / 2, Flow::Target});
  } else {
    const auto w0 = params_.add("enc.W0", num_nodes, h);
    const auto w1 = params_.add("enc.W1", h, l);
    branches_.push_back({w0, w1, 0, Flow::Normalized});
  }
  if (config_.kind == ModelKind::Gravity) log_lambda_ = params_.add("dec.log_lambda", 1, 1);
  if (config_.kind == ModelKind::Mlp) {
    const std::size_t outs = multiclass_head() ? 4 : 1;
    mlp_w_ = params_.add("dec.mlp.W", outs, 2 * l);
    mlp_b_ = params_.add("dec.mlp.b", outs, 1);
  }
  if (config_.kind == ModelKind::Gravity) params_.view(log_lambda_)(0, 0) = std::log(config_.initial_lambda);
}

double Model::lambda() const {
  if (config_.kind != ModelKind::Gravity) return 0.0;
  return std::exp(params_.view(log_lambda_)(0, 0));
}

void Model::initialize(Rng& rng) {
  std::fill(params_.values().begin(), params_.values().end(), 0.0);
  auto glorot = [&](std::size_t index) {
    auto w = params_.view(index);
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (std::size_t i = 0; i < w.size(); ++i) w.data[i] = rng.uniform(-limit, limit);
  };
  for (const auto& b : branches_) {
    glorot(b.w0);
    glorot(b.w1);
  }
  if (config_.kind == ModelKind::Gravity) params_.view(log_lambda_)(0, 0) = std::log(config_.initial_lambda);
  if (config_.kind == ModelKind::Mlp) glorot(mlp_w_);
}

double Model::activate(double x) const {
  return config_.activation == Activation::Relu ? std::max(x, 0.0) : x;
}

double Model::activate_grad(double pre) const {
  if (config_.activation == Activation::Identity) return 1.0;
  return pre > 0.0 ? 1.0 : 0.0;
}

Model::Propagators Model::propagators(const GraphOperators& ops, Flow flow) {
  switch (flow) {
    case Flow::Normalized:
      return {&ops.normalized, &ops.normalized_t, &ops.normalized, &ops.normalized_t};
    case Flow::Source:
      return {&ops.adjacency_t, &ops.adjacency, &ops.adjacency, &ops.adjacency_t};
    case Flow::Target:
      return {&ops.adjacency, &ops.adjacency_t, &ops.adjacency_t, &ops.adjacency};
  }
  return {};
}

Encoding Model::encode(const GraphOperators& ops) const {
  if (ops.num_nodes != num_nodes_) {
    throw InputError("encode: graph has " + std::to_string(ops.num_nodes) + " nodes, model expects " +
                     std::to_string(num_nodes_));
  }
  Encoding enc;
  enc.z = DenseMatrix(num_nodes_, config_.output_dim);
  for (const auto& b : branches_) {
    const auto p = propagators(ops, b.flow);
    BranchCache cache;
    cache.pre = spmm(*p.first, params_.view(b.w0));
    cache.hidden = cache.pre;
    for (auto& x : cache.hidden.data()) x = activate(x);
    cache.propagated = spmm(*p.second, cache.hidden);
    const auto zb = matmul(cache.propagated, params_.view(b.w1));
    for (std::size_t r = 0; r < num_nodes_; ++r) {
      std::copy(zb.row(r).begin(), zb.row(r).end(), enc.z.row(r).begin() + static_cast<std::ptrdiff_t>(b.col_offset));
    }
    enc.branches.push_back(std::move(cache));
  }
  return enc;
}

void Model::encode_backward(const GraphOperators& ops, const Encoding& enc, ConstMatrixView dz,
                            std::span<double> grad) const {
  for (std::size_t bi = 0; bi < branches_.size(); ++bi) {
    const auto& b = branches_[bi];
    const auto& cache = enc.branches[bi];
    const auto p = propagators(ops, b.flow);
    const auto w1 = params_.view(b.w1);

    DenseMatrix dzb(num_nodes_, w1.cols);
    for (std::size_t r = 0; r < num_nodes_; ++r) {
      for (std::size_t c = 0; c < w1.cols; ++c) dzb(r, c) = dz(r, b.col_offset + c);
    }

    const auto dw1 = matmul_tn(cache.propagated, dzb);
    auto g1 = params_.view_in(grad, b.w1);
    for (std::size_t i = 0; i < g1.size(); ++i) g1.data[i] += dw1.data()[i];

    const auto dprop = matmul_nt(dzb, w1);
    auto dpre = spmm(*p.second_t, dprop);
    const auto pre = cache.pre.data();
    auto dp = dpre.data();
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] *= activate_grad(pre[i]);

    const auto dw0 = spmm(*p.first_t, dpre);
    auto g0 = params_.view_in(grad, b.w0);
    for (std::size_t i = 0; i < g0.size(); ++i) g0.data[i] += dw0.data()[i];
  }
}

namespace {

double masked(DropoutMask mask, std::size_t i) { return mask.empty() ? 1.0 : mask[i]; }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double Model::logit(ConstMatrixView z, Edge e, DropoutMask mask) const {
  const std::size_t l = config_.output_dim;
  const auto zu = z.row(e.src);
  const auto zv = z.row(e.dst);
  switch (config_.kind) {
    case ModelKind::Gae:
      return dot(zu, zv);
    case ModelKind::SourceTarget:
    case ModelKind::Digae:
      // z_v[:L/2] . z_u[L/2:]
      return dot(zv.first(l / 2), zu.subspan(l / 2));
    case ModelKind::Gravity: {
      double sq = 0.0;
      for (std::size_t k = 1; k < l; ++k) {
        const double d = zu[k] - zv[k];
        sq += d * d;
      }
      return zv[0] - lambda() * std::log(std::max(sq, kGravityDistanceFloor));
    }
    case ModelKind::Mlp: {
      if (multiclass_head()) throw InputError("logit: multi-class head has no single logit");
      const auto w = params_.view(mlp_w_).row(0);
      double s = params_.view(mlp_b_)(0, 0);
      for (std::size_t k = 0; k < l; ++k) {
        s += w[k] * zu[k] * masked(mask, k);
        s += w[l + k] * zv[k] * masked(mask, l + k);
      }
      return s;
    }
  }
  return 0.0;
}

void Model::logit_backward(ConstMatrixView z, Edge e, double d, MatrixView dz, std::span<double> grad,
                           DropoutMask mask) const {
  const std::size_t l = config_.output_dim;
  const auto zu = z.row(e.src);
  const auto zv = z.row(e.dst);
  auto du = dz.row(e.src);
  auto dv = dz.row(e.dst);
  switch (config_.kind) {
    case ModelKind::Gae:
      for (std::size_t k = 0; k < l; ++k) {
        du[k] += d * zv[k];
        dv[k] += d * zu[k];
      }
      return;
    case ModelKind::SourceTarget:
    case ModelKind::Digae: {
      const std::size_t h = l / 2;
      for (std::size_t k = 0; k < h; ++k) {
        dv[k] += d * zu[h + k];
        du[h + k] += d * zv[k];
      }
      return;
    }
    case ModelKind::Gravity: {
      double sq = 0.0;
      for (std::size_t k = 1; k < l; ++k) {
        const double diff = zu[k] - zv[k];
        sq += diff * diff;
      }
      const double lam = lambda();
      dv[0] += d;
      const bool clamped = sq < kGravityDistanceFloor;
      const double log_sq = std::log(std::max(sq, kGravityDistanceFloor));
      params_.view_in(grad, log_lambda_)(0, 0) += d * (-lam * log_sq);
      if (!clamped) {
        const double coef = d * (-lam / sq) * 2.0;
        for (std::size_t k = 1; k < l; ++k) {
          const double diff = zu[k] - zv[k];
          du[k] += coef * diff;
          dv[k] -= coef * diff;
        }
      }
      return;
    }
    case ModelKind::Mlp: {
      const auto w = params_.view(mlp_w_).row(0);
      auto gw = params_.view_in(grad, mlp_w_).row(0);
      params_.view_in(grad, mlp_b_)(0, 0) += d;
      for (std::size_t k = 0; k < l; ++k) {
        const double mu = masked(mask, k);
        const double mv = masked(mask, l + k);
        gw[k] += d * zu[k] * mu;
        gw[l + k] += d * zv[k] * mv;
        du[k] += d * w[k] * mu;
        dv[k] += d * w[l + k] * mv;
      }
      return;
    }
  }
}

std::array<double, 4> Model::class_logits(ConstMatrixView z, Edge e, DropoutMask mask) const {
  if (!multiclass_head()) throw InputError("class_logits: model has a binary head");
  const std::size_t l = config_.output_dim;
  const auto zu = z.row(e.src);
  const auto zv = z.row(e.dst);
  const auto w = params_.view(mlp_w_);
  const auto b = params_.view(mlp_b_);
  std::array<double, 4> out{};
  for (std::size_t c = 0; c < 4; ++c) {
    double s = b(c, 0);
    for (std::size_t k = 0; k < l; ++k) {
      s += w(c, k) * zu[k] * masked(mask, k);
      s += w(c, l + k) * zv[k] * masked(mask, l + k);
    }
    out[c] = s;
  }
  return out;
}

void Model::class_logits_backward(ConstMatrixView z, Edge e, const std::array<double, 4>& d, MatrixView dz,
                                  std::span<double> grad, DropoutMask mask) const {
  const std::size_t l = config_.output_dim;
  const auto zu = z.row(e.src);
  const auto zv = z.row(e.dst);
  auto du = dz.row(e.src);
  auto dv = dz.row(e.dst);
  const auto w = params_.view(mlp_w_);
  auto gw = params_.view_in(grad, mlp_w_);
  auto gb = params_.view_in(grad, mlp_b_);
  for (std::size_t c = 0; c < 4; ++c) {
    if (d[c] == 0.0) continue;
    gb(c, 0) += d[c];
    for (std::size_t k = 0; k < l; ++k) {
      const double mu = masked(mask, k);
      const double mv = masked(mask, l + k);
      gw(c, k) += d[c] * zu[k] * mu;
      gw(c, l + k) += d[c] * zv[k] * mv;
      du[k] += d[c] * w(c, k) * mu;
      dv[k] += d[c] * w(c, l + k) * mv;
    }
  }
}

void Model::sample_dropout(Rng& rng, std::span<double> mask) const {
  const double keep = 1.0 - config_.dropout;
  for (auto& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
}

std::array<double, 4> softmax4(const std::array<double, 4>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::array<double, 4> p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    p[c] = std::exp(logits[c] - mx);
    sum += p[c];
  }
  for (auto& x : p) x /= sum;
  return p;
}

std::vector<double> score_edges(const Model& model, const Encoding& enc, std::span<const Edge> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& e : pairs) {
    if (model.multiclass_head()) {
      const auto p = softmax4(model.class_logits(enc.z, e));
      out.push_back(p[2] + p[3]);
    } else {
      out.push_back(sigmoid(model.logit(enc.z, e)));
    }
  }
  return out;
}

std::vector<double> score_edges(const Model& model, const GraphOperators& ops, std::span<const Edge> pairs) {
  if (pairs.empty()) return {};
  return score_edges(model, model.encode(ops), pairs);
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto& c = model.config();
  nlohmann::ordered_json j;
  j["config"] = {{"model", std::string(to_string(c.kind))},
                 {"num_nodes", model.num_nodes()},
                 {"hidden_dim", c.hidden_dim},
                 {"output_dim", c.output_dim},
                 {"activation", c.activation == Activation::Relu ? "relu" : "identity"},
                 {"initial_lambda", c.initial_lambda},
                 {"dropout", c.dropout},
                 {"head", c.head == DecoderHead::MultiClass ? "multiclass" : "binary"},
                 {"digae_alpha", c.digae_alpha},
                 {"digae_beta", c.digae_beta}};
  auto& segs = j["segments"];
  segs = nlohmann::ordered_json::array();
  const auto& p = model.params();
  for (std::size_t i = 0; i < p.segments().size(); ++i) {
    const auto& s = p.segment(i);
    const auto v = p.view(i);
    segs.push_back({{"name", s.name},
                    {"rows", s.rows},
                    {"cols", s.cols},
                    {"values", std::vector<double>(v.data, v.data + v.size())}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  const auto& jc = j.at("config");
  ModelConfig c;
  c.kind = model_kind_from_string(jc.at("model").get<std::string>());
  c.hidden_dim = jc.at("hidden_dim");
  c.output_dim = jc.at("output_dim");
  c.activation = jc.at("activation") == "relu" ? Activation::Relu : Activation::Identity;
  c.initial_lambda = jc.at("initial_lambda");
  c.dropout = jc.at("dropout");
  c.head = jc.at("head") == "multiclass" ? DecoderHead::MultiClass : DecoderHead::Binary;
  c.digae_alpha = jc.at("digae_alpha");
  c.digae_beta = jc.at("digae_beta");
  Model m(c, jc.at("num_nodes").get<std::size_t>());
  for (const auto& s : j.at("segments")) {
    const auto idx = m.params().find(s.at("name").get<std::string>());
    auto v = m.params().view(idx);
    const auto values = s.at("values").get<std::vector<double>>();
    if (values.size() != v.size() || s.at("rows") != v.rows || s.at("cols") != v.cols) {
      throw InputError("checkpoint segment shape mismatch for " + s.at("name").get<std::string>());
    }
    std::copy(values.begin(), values.end(), v.data);
  }
  return m;
}

}  // namespace dirlink
