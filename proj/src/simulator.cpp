#include "dekrr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dekrr {

std::vector<Index> allocate_features(const std::vector<Index>& N_js, Index Dbar,
                                     AllocationStrategy strategy) {
  const int J = static_cast<int>(N_js.size());
  require(J >= 1, "allocate_features: no nodes");
  require(Dbar >= 1, "allocate_features: Dbar must be >= 1");
  const Index budget = Dbar * J;
  require(budget >= J, "allocate_features: budget below one feature per node");
  if (strategy == AllocationStrategy::equal)
    return std::vector<Index>(static_cast<std::size_t>(J), Dbar);

  std::vector<double> w(J);
  double wsum = 0;
  for (int j = 0; j < J; ++j) {
    require(N_js[j] >= 1, "allocate_features: empty node");
    w[j] = std::sqrt(static_cast<double>(N_js[j]));
    wsum += w[j];
  }
  std::vector<Index> D(J);
  Index total = 0;
  for (int j = 0; j < J; ++j) {
    D[j] = std::max<Index>(1, static_cast<Index>(std::lround(w[j] / wsum * budget)));
    total += D[j];
  }
  // Correct the rounding residue one unit at a time, largest node first
  // (ties toward the smaller id), never dropping a node below one feature.
  std::vector<int> by_size(J);
  std::iota(by_size.begin(), by_size.end(), 0);
  std::sort(by_size.begin(), by_size.end(), [&](int a, int b) {
    if (N_js[a] != N_js[b]) return N_js[a] > N_js[b];
    return a < b;
  });
  std::size_t cursor = 0;
  while (total != budget) {
    int j = by_size[cursor];
    if (total < budget) {
      ++D[j];
      ++total;
    } else if (D[j] > 1) {
      --D[j];
      --total;
    }
    cursor = (cursor + 1) % by_size.size();
  }
  return D;
}

namespace {

void record(ExchangeTrace* trace, int from, int to, ExchangeTrace::Payload kind,
            std::uint64_t scalars, const Matrix& content) {
  if (!trace) return;
  trace->messages.push_back({from, to, kind, scalars, content});
}

Matrix spec_payload(const FeatureSpec& spec) {
  // numeric content of a spec message: frequencies with phases appended
  Matrix m(spec.D(), spec.dim() + (spec.phase.size() > 0 ? 1 : 0));
  m.leftCols(spec.dim()) = spec.omega;
  if (spec.phase.size() > 0) m.col(spec.dim()) = spec.phase;
  return m;
}

std::uint64_t spec_scalars(const FeatureSpec& spec) {
  return static_cast<std::uint64_t>(spec.D() * spec.dim() + spec.phase.size());
}

}  // namespace

std::uint64_t setup_exchange(std::vector<NodeState>& states, const Topology& topo,
                             const PenaltyConfig& pc, double lambda, double N,
                             Exec policy, ExchangeTrace* trace) {
  auto report = validate(topo);
  require(report.ok, "setup_exchange: invalid topology: " + report.violation);
  const int J = topo.J;
  require(static_cast<int>(states.size()) == J, "setup_exchange: state count != J");

  std::uint64_t setup_scalars = 0;

  // Phase 1: every node sends its spec and own-data block to each neighbor.
  // Receiving p stores Z_jj as "neighbor's own block" and evaluates the
  // sender's features on its own inputs.
  for (int j = 0; j < J; ++j) {
    require(states[j].Zjj.rows() == states[j].spec.feature_dim(),
            "setup_exchange: node " + std::to_string(j) + " is missing Zjj");
    for (int p : topo.nbrs[j]) {
      setup_scalars += spec_scalars(states[j].spec);
      setup_scalars += static_cast<std::uint64_t>(states[j].Zjj.size());
      record(trace, j, p, ExchangeTrace::Payload::feature_spec,
             spec_scalars(states[j].spec), spec_payload(states[j].spec));
      record(trace, j, p, ExchangeTrace::Payload::z_block,
             static_cast<std::uint64_t>(states[j].Zjj.size()), states[j].Zjj);
    }
  }

  // Each node p evaluates every received spec on its own training inputs.
  // These are independent per (p, neighbor) pair; parallelism stays inside
  // feature_matrix, which is already element-deterministic.
  std::vector<std::map<int, Matrix>> cross(J);  // cross[p][j] = Z_j(X_p)
  for (int p = 0; p < J; ++p)
    for (int j : topo.nbrs[p])
      cross[p][j] = feature_matrix(states[j].spec, states[p].shard.x_train, policy);

  // Phase 2: the computed cross blocks are returned to their spec owners.
  // Node j ends up holding Z_jp = z_j(X_p) for each neighbor p.
  for (int p = 0; p < J; ++p) {
    for (int j : topo.nbrs[p]) {
      setup_scalars += static_cast<std::uint64_t>(cross[p][j].size());
      record(trace, p, j, ExchangeTrace::Payload::z_block,
             static_cast<std::uint64_t>(cross[p][j].size()), cross[p][j]);
      states[j].Zjp[p] = cross[p][j];
      states[p].Zpj[j] = cross[p][j];  // p keeps its local copy of z_j(X_p)
    }
  }

  // Build auxiliary matrices; each node also needs the received Z_pp blocks.
  for (int j = 0; j < J; ++j) {
    std::map<int, Matrix> neighbor_Zpp;
    for (int p : topo.nbrs[j]) neighbor_Zpp[p] = states[p].Zjj;
    states[j].lambda_j =
        effective_lambda(lambda, N, J, static_cast<double>(states[j].shard.n_train()));
    build_aux(states[j], neighbor_Zpp, topo, pc, 1.0, lambda, N);
  }
  return setup_scalars;
}

TrainResult run(std::vector<NodeState> states, const Topology& topo,
                const PenaltyConfig& pc, double lambda, double N,
                const RunControl& control, ExchangeTrace* trace) {
  const int J = topo.J;
  TrainResult result;
  result.per_round_scalars = 0;
  for (int j = 0; j < J; ++j)
    result.per_round_scalars +=
        static_cast<std::uint64_t>(topo.degree(j)) *
        static_cast<std::uint64_t>(states[j].spec.feature_dim());

  for (int j = 0; j < J; ++j) {
    if (states[j].theta.size() == 0)
      states[j].theta = Vector::Zero(states[j].spec.feature_dim());
    require(states[j].theta.size() == states[j].spec.feature_dim(),
            "run: theta dimension mismatch on node " + std::to_string(j));
  }

  double self_scale = 1.0;
  double L = objective(states, topo, pc, lambda, N);
  const double slack = 1e-12 * std::max(1.0, L);
  auto disagree = [&]() {
    return control.disagreement ? control.disagreement(states) : 0.0;
  };
  result.log.push_back({0, L, 0.0, disagree(), 0});

  std::uint64_t cum = 0;
  std::vector<Vector> prev(J), next(J);
  for (int k = 1; k <= control.kmax; ++k) {
    // Send phase: theta_j^k travels to every neighbor (the ledger counts it;
    // content-wise each node already shares memory in-process).
    for (int j = 0; j < J; ++j) {
      prev[j] = states[j].theta;
      if (trace)
        for (int p : topo.nbrs[j])
          record(trace, j, p, ExchangeTrace::Payload::theta_vector,
                 static_cast<std::uint64_t>(prev[j].size()), prev[j]);
    }
    cum += result.per_round_scalars;

    // Compute phase: all nodes step simultaneously from round-k values.
    // Each iteration writes only next[j]; inputs are the immutable prev
    // snapshot, so scheduling cannot affect the result.
    par_for(control.policy, J, [&](std::ptrdiff_t j) {
      std::vector<const Vector*> nthetas;
      nthetas.reserve(topo.nbrs[j].size());
      for (int p : topo.nbrs[j]) nthetas.push_back(&prev[p]);
      next[j] = local_update(states[j].aux, prev[j], nthetas);
    });

    double max_abs = 0, max_rel = 0;
    for (int j = 0; j < J; ++j) {
      require(next[j].allFinite(), "run: non-finite coefficients on node " +
                                       std::to_string(j) + " at round " +
                                       std::to_string(k));
      const double dn = (next[j] - prev[j]).norm();
      max_abs = std::max(max_abs, dn);
      max_rel = std::max(max_rel, dn / std::max(1.0, prev[j].norm()));
      states[j].theta = next[j];
    }

    const double L_new = objective(states, topo, pc, lambda, N);
    if (L_new > L + slack) {
      // Ascent step observed: damp all nodes by doubling the self-penalty
      // and refactor. The step itself is kept.
      if (self_scale >= control.safeguard_cap) {
        result.log.push_back({k, L_new, max_abs, disagree(), cum});
        result.reason = StopReason::safeguard_cap;
        L = L_new;
        break;
      }
      self_scale *= 2.0;
      for (int j = 0; j < J; ++j)
        rebuild_aux_self(states[j],
                         self_scale * pc.ctilde_self(j, N, topo.degree(j)));
    }
    L = L_new;
    result.log.push_back({k, L, max_abs, disagree(), cum});
    if (max_rel <= control.epsilon) {
      result.reason = StopReason::tolerance;
      break;
    }
    if (k == control.kmax) result.reason = StopReason::max_rounds;
  }
  if (control.kmax == 0) result.reason = StopReason::max_rounds;

  result.final_self_scale = self_scale;
  result.states = std::move(states);
  return result;
}

CommCost comm_cost(const Topology& topo, const std::vector<Index>& feature_dims,
                   int rounds) {
  require(static_cast<int>(feature_dims.size()) == topo.J,
          "comm_cost: feature_dims size != J");
  CommCost c;
  for (int j = 0; j < topo.J; ++j)
    c.per_round += static_cast<std::uint64_t>(topo.degree(j)) *
                   static_cast<std::uint64_t>(feature_dims[j]);
  c.total = c.per_round * static_cast<std::uint64_t>(rounds);
  return c;
}

}  // namespace dekrr
