#pragma once
// Synchronous in-process network simulator. Before iterating, nodes exchange
// feature specs and feature-space blocks with their one-hop neighbors (three
// payloads per edge direction); each round then broadcasts the current
// coefficient vectors and applies the closed-form update on every node
// simultaneously from round-k values. Message payloads never contain raw
// inputs — only feature-space quantities travel.

#include <cstdint>
#include <functional>
#include <vector>

#include "dekrr/common.hpp"
#include "dekrr/graph.hpp"
#include "dekrr/parallel.hpp"
#include "dekrr/solver.hpp"

namespace dekrr {

enum class AllocationStrategy { equal, sqrt_proportional };

// equal: D_j = Dbar everywhere. sqrt_proportional: D_j proportional to
// sqrt(N_j), rounded, with the rounding residue corrected one unit at a time
// starting from the largest node so that sum D_j = J * Dbar exactly.
std::vector<Index> allocate_features(const std::vector<Index>& N_js, Index Dbar,
                                     AllocationStrategy strategy);

// Optional record of every simulated message, for protocol audits.
struct ExchangeTrace {
  enum class Payload { feature_spec, z_block, theta_vector };
  struct Message {
    int from = 0, to = 0;
    Payload payload = Payload::feature_spec;
    std::uint64_t scalars = 0;  // transmitted scalar count
    Matrix content;             // copy of the payload's numeric content
  };
  std::vector<Message> messages;
};

// Runs the pre-iteration exchange and builds every node's auxiliary
// matrices. Nodes must already hold their FeatureSpec, shard, and Zjj.
// Returns the total scalar count moved during setup (tracked separately from
// the per-round ledger).
std::uint64_t setup_exchange(std::vector<NodeState>& states, const Topology& topo,
                             const PenaltyConfig& pc, double lambda, double N,
                             Exec policy = Exec::parallel,
                             ExchangeTrace* trace = nullptr);

struct RoundLogEntry {
  int round = 0;           // 0 = initial state, k >= 1 after the k-th update
  double objective = 0;
  double max_dtheta = 0;   // max_j ||theta_j^k - theta_j^{k-1}||_2 (0 at round 0)
  double disagreement = 0; // consensus probe value, 0 when no probe installed
  std::uint64_t cum_scalars = 0;  // iteration traffic only
};

enum class StopReason { tolerance, max_rounds, safeguard_cap };

struct TrainResult {
  std::vector<NodeState> states;
  std::vector<RoundLogEntry> log;
  StopReason reason = StopReason::max_rounds;
  std::uint64_t per_round_scalars = 0;
  std::uint64_t setup_scalars = 0;  // pre-iteration exchange traffic, filled
                                    // by callers that also ran the setup
  double final_self_scale = 1.0;  // safeguard multiplier at termination

  int rounds() const { return static_cast<int>(log.size()) - 1; }
};

struct RunControl {
  double epsilon = 1e-6;  // stop when max_j ||dtheta_j|| / max(1, ||theta_j||) <= epsilon
  int kmax = 2000;
  Exec policy = Exec::parallel;
  double safeguard_cap = 1048576.0;  // 2^20: max self-penalty scale-up
  // Optional per-round consensus diagnostic (e.g. a probe-set evaluator).
  std::function<double(const std::vector<NodeState>&)> disagreement;
};

// Synchronous rounds until tolerance, round cap, or safeguard cap. If the
// objective rises between rounds (beyond roundoff slack), every node's
// self-penalty doubles and the normal matrices are rebuilt — no revert.
TrainResult run(std::vector<NodeState> states, const Topology& topo,
                const PenaltyConfig& pc, double lambda, double N,
                const RunControl& control, ExchangeTrace* trace = nullptr);

struct CommCost {
  std::uint64_t per_round = 0;
  std::uint64_t total = 0;
};

// per_round = sum_j degree(j) * feature_dims[j]; total = per_round * rounds.
CommCost comm_cost(const Topology& topo, const std::vector<Index>& feature_dims,
                   int rounds);

}  // namespace dekrr
