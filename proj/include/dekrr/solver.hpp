#pragma once
// Per-node mathematics for consensus kernel ridge regression in feature
// space. Each node j holds a coefficient vector theta_j over its own random
// feature map z_j and minimizes, jointly with its neighbors, a global
// objective that fits local labels, applies a ridge penalty, and penalizes
// prediction disagreement with neighbors on the node's own inputs:
//
//   L = sum_j [ (1/N) ||theta_j' Z_jj - Y_j||^2 + (lambda/J) ||theta_j||^2
//               + sum_{p in nbrs(j)} ct_{j,nei} ||theta_j' Z_jj - theta_p' Z_pj||^2 ]
//
// where Z_ij = z_i(X_j) is node i's feature matrix evaluated on node j's
// training inputs, and ct are the penalty coefficients normalized by
// N * (deg+1). One synchronous round updates every theta_j in closed form by
// minimizing a local surrogate that anchors the node to its previous iterate
// through a self-penalty with coefficient 2*ct_self.

#include <map>
#include <vector>

#include "dekrr/common.hpp"
#include "dekrr/dataset.hpp"
#include "dekrr/features.hpp"
#include "dekrr/graph.hpp"

namespace dekrr {

// Raw penalty coefficients per node; the normalized ("tilde") values divide
// by N * (|nbrs|+1).
struct PenaltyConfig {
  Vector c_self;
  Vector c_nei;

  static PenaltyConfig uniform(int J, double c_nei, double self_mult);

  double ctilde_self(int j, double N, int deg) const {
    return c_self(j) / (N * (deg + 1));
  }
  double ctilde_nei(int j, double N, int deg) const {
    return c_nei(j) / (N * (deg + 1));
  }
};

// Everything the closed-form update needs, built once after the feature
// exchange. The normal matrix ("bracket") is kept factored; applying its
// inverse means two triangular solves.
struct AuxMatrices {
  Matrix bracket;          // SPD normal matrix of the local surrogate
  Eigen::LLT<Matrix> G;    // factorization of bracket
  Vector d;                // (1/N) Z_jj Y_j'
  Matrix S;                // 2 ct_self Z_jj Z_jj'  (self-anchor)
  std::vector<Matrix> P;   // per neighbor (topology order): coupling blocks

  // Caches so a change of ct_self rebuilds bracket/S without the Z blocks:
  // bracket = (coef_base + 2 ct_self) M_self + ridge I + M_nbr.
  Matrix M_self;           // Z_jj Z_jj'
  Matrix M_nbr;            // sum_p ct_{p,nei} Z_jp Z_jp'
  double coef_base = 0;    // 1/N + deg * ct_{j,nei}
  double ridge = 0;        // lambda / J
};

struct NodeState {
  int id = 0;
  Shard shard;
  FeatureSpec spec;
  Vector theta;                 // length = spec.feature_dim()
  Matrix Zjj;                   // own features on own training inputs
  std::map<int, Matrix> Zjp;    // own features on neighbor p's training inputs
  std::map<int, Matrix> Zpj;    // neighbor p's features on own training inputs
  AuxMatrices aux;
  double lambda_j = 0;
};

// lambda_j = lambda * N / (J * N_j); the ridge weight each node applies so
// that (N_j/N) * lambda_j = lambda / J globally.
double effective_lambda(double lambda, double N, int J, double N_j);

// Assembles bracket/G/d/S/P for node `st`. `neighbor_Zpp[p]` is neighbor p's
// own-data feature matrix (received during the exchange). `self_scale`
// multiplies ct_self (used by the safeguard schedule).
void build_aux(NodeState& st, const std::map<int, Matrix>& neighbor_Zpp,
               const Topology& topo, const PenaltyConfig& pc, double self_scale,
               double lambda, double N);

// Re-derives bracket, G and S for a new scaled ct_self using the caches;
// d and P are unchanged by construction.
void rebuild_aux_self(NodeState& st, double ctilde_self_scaled);

// theta' = G^-1 (d + S theta + sum_p P_p theta_p). Neighbor vectors must be
// passed in the node's topology order.
Vector local_update(const AuxMatrices& aux, const Vector& theta,
                    const std::vector<const Vector*>& neighbor_thetas);

// The global objective L above. The p = j penalty term is identically zero
// and skipped; ct_self never enters.
double objective(const std::vector<NodeState>& states, const Topology& topo,
                 const PenaltyConfig& pc, double lambda, double N);

// Per-node descent condition: monotone decrease of L is guaranteed when
//   ct_self >= deg * ct_nei / 2 + lmax(M_nbr) / (2 lmin(M_self)).
// When lmin(M_self) <= 1e-12 — always the case when feature_dim > N_j, by
// rank — the bound is unsatisfiable.
struct DescentReport {
  bool satisfiable = false;
  bool satisfied = false;
  double required_ctilde_self = 0;  // +inf when unsatisfiable
  double lambda_min_self = 0;
  double lambda_max_nbr = 0;
};

std::vector<DescentReport> check_descent_condition(const std::vector<NodeState>& states,
                                                 const Topology& topo,
                                                 const PenaltyConfig& pc,
                                                 double self_scale, double N);

}  // namespace dekrr
