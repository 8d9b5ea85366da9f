#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirlink/diffmath.hpp"
#include "dirlink/graph.hpp"
#include "dirlink/rng.hpp"

namespace dirlink {

enum class ModelKind { Gae, Gravity, SourceTarget, Mlp, Digae };
enum class Activation { Relu, Identity };
enum class DecoderHead { Binary, MultiClass };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct ModelConfig {
  ModelKind kind{ModelKind::Gravity};
  std::size_t hidden_dim{64};
  std::size_t output_dim{32};
  Activation activation{Activation::Relu};
  double initial_lambda{1.0};   // Gravity only
  double dropout{0.5};          // MLP decoder only, training time only
  DecoderHead head{DecoderHead::Binary};  // MultiClass is only valid for Mlp
  double digae_alpha{0.5};      // fixed, not trained
  double digae_beta{0.5};

  /// Throws ConfigError for odd L with ST/DiGAE, L < 2 with Gravity, etc.
  void validate() const;
};

/// Propagation matrices for one training graph; self-loops are added here.
struct GraphOperators {
  std::size_t num_nodes{0};
  SparseMatrix normalized;     // D_out^-1 (A + I)
  SparseMatrix normalized_t;
  SparseMatrix adjacency;      // A + I (DiGAE)
  SparseMatrix adjacency_t;

  static GraphOperators build(const DirectedGraph& g);
};

struct BranchCache {
  DenseMatrix pre;         // first propagation applied to W0
  DenseMatrix hidden;      // activation(pre)
  DenseMatrix propagated;  // second propagation applied to hidden
};

struct Encoding {
  DenseMatrix z;  // N x L
  std::vector<BranchCache> branches;
};

/// Per-pair dropout mask over the decoder input (z_u || z_v); empty = none.
using DropoutMask = std::span<const double>;

/*
 * Graph autoencoder with one-hot inputs. The first layer's X * W0 is W0
 * itself, so the encoder never materialises X.
 *
 *   standard: Z = P act(P W0) W1,   P = D_out^-1 (A + I)
 *   DiGAE:    Z_S = Ã act(Ãᵀ W0_S) W1_S,  Z_T = Ãᵀ act(Ã W0_T) W1_T,  Z = [Z_S | Z_T]
 *
 * Decoders produce one logit per ordered pair (or four for the multi-class
 * MLP head). Backward methods accumulate into caller-owned buffers.
 */
class Model {
 public:
  Model(ModelConfig config, std::size_t num_nodes);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] ModelKind kind() const { return config_.kind; }
  [[nodiscard]] std::size_t num_nodes() const { return num_nodes_; }
  [[nodiscard]] std::size_t embedding_dim() const { return config_.output_dim; }
  [[nodiscard]] bool multiclass_head() const { return config_.head == DecoderHead::MultiClass; }
  [[nodiscard]] bool uses_dropout() const { return config_.kind == ModelKind::Mlp && config_.dropout > 0.0; }
  [[nodiscard]] double lambda() const;

  ParameterVector& params() { return params_; }
  [[nodiscard]] const ParameterVector& params() const { return params_; }

  /// Glorot-uniform weights, zero biases, log λ = ln(initial_lambda).
  void initialize(Rng& rng);

  [[nodiscard]] Encoding encode(const GraphOperators& ops) const;
  void encode_backward(const GraphOperators& ops, const Encoding& enc, ConstMatrixView dz,
                       std::span<double> grad) const;

  [[nodiscard]] double logit(ConstMatrixView z, Edge e, DropoutMask mask = {}) const;
  void logit_backward(ConstMatrixView z, Edge e, double dlogit, MatrixView dz, std::span<double> grad,
                      DropoutMask mask = {}) const;

  /// Four class logits (nb, nu, pu, pb); multi-class MLP head only.
  [[nodiscard]] std::array<double, 4> class_logits(ConstMatrixView z, Edge e, DropoutMask mask = {}) const;
  void class_logits_backward(ConstMatrixView z, Edge e, const std::array<double, 4>& dlogits, MatrixView dz,
                             std::span<double> grad, DropoutMask mask = {}) const;

  /// Fills `mask` (length 2L) with 0 or 1/(1-p) entries.
  void sample_dropout(Rng& rng, std::span<double> mask) const;

 private:
  enum class Flow { Normalized, Source, Target };

  struct Branch {
    std::size_t w0;
    std::size_t w1;
    std::size_t col_offset;
    Flow flow;
  };

  struct Propagators {
    const SparseMatrix* first;
    const SparseMatrix* first_t;
    const SparseMatrix* second;
    const SparseMatrix* second_t;
  };

  static Propagators propagators(const GraphOperators& ops, Flow flow);
  double activate(double x) const;
  double activate_grad(double pre) const;

  ModelConfig config_;
  std::size_t num_nodes_;
  ParameterVector params_;
  std::vector<Branch> branches_;
  std::size_t log_lambda_{0};
  std::size_t mlp_w_{0};
  std::size_t mlp_b_{0};
};

/// Floor applied to Gravity's squared distance before the log.
inline constexpr double kGravityDistanceFloor = 1e-12;

/// Edge probabilities for every pair. For the multi-class head this is
/// P(pu) + P(pb), the probability that (u, v) exists.
std::vector<double> score_edges(const Model& model, const GraphOperators& ops, std::span<const Edge> pairs);
std::vector<double> score_edges(const Model& model, const Encoding& enc, std::span<const Edge> pairs);

/// Softmax of four logits.
std::array<double, 4> softmax4(const std::array<double, 4>& logits);

/// JSON checkpoint of the config and named parameter segments.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace dirlink
