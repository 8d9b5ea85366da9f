#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dirlink/diffmath.hpp"
#include "dirlink/models.hpp"
#include "dirlink/strategies.hpp"

namespace dirlink {

/// Random simple digraph with `unidirectional` one-way edges and `bidirectional` reciprocal pairs.
DirectedGraph random_digraph(std::size_t nodes, std::size_t unidirectional, std::size_t bidirectional, Rng& rng);

struct GradCheckResult {
  std::string loss;  // "L_G", "L_MC", "S", "MO", ...
  FiniteDiffReport report;
};

struct GradCheckSetup {
  std::size_t hidden_dim{8};
  std::size_t output_dim{4};
  ScalarizationWeights alpha{0.5, 0.3, 0.2};
  FiniteDiffOptions fd;
};

/*
 * Checks the analytic gradient of every loss a strategy trains on: the task
 * losses it uses and, for S and MO, their weighted sum (MGDA weights held
 * fixed). Dropout masks are replayed from the same stream on every call.
 */
std::vector<GradCheckResult> gradcheck(ModelKind kind, Strategy strategy, const DirectedGraph& graph,
                                       std::uint64_t seed, const GradCheckSetup& setup = {});

}  // namespace dirlink
