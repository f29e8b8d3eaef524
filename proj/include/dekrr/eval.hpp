#pragma once
// Metrics and reference predictors: relative square error, the exact
// centralized kernel solution (dense solve, desk-scale guard), a centralized
// random-feature ridge, the three comparison methods built on the shared
// simulator, consensus diagnostics, and grid cross-validation.

#include <cstdint>
#include <vector>

#include "dekrr/common.hpp"
#include "dekrr/dataset.hpp"
#include "dekrr/features.hpp"
#include "dekrr/graph.hpp"
#include "dekrr/parallel.hpp"
#include "dekrr/simulator.hpp"

namespace dekrr {

// sum_i (f_i - y_i)^2 / sum_i (y_i - ybar)^2. Lengths must be >= 2 and the
// targets must not be all identical.
double rse(const RowVector& predictions, const RowVector& targets);

// Gaussian kernel matrix k(a_i, b_j) = exp(-||a_i - b_j||^2 / (2 sigma^2));
// columns of A and B are points.
Matrix gaussian_gram(const Matrix& A, const Matrix& B, double sigma,
                     Exec policy = Exec::parallel);

// Exact kernel ridge solution alpha = (K + lambda N I)^-1 y'; prediction
// f(x) = sum_i alpha_i k(x, x_i). Guarded to N <= 10^4 for the dense solve.
struct KrrPredictor {
  Matrix X;  // d x N support points
  Vector alpha;
  double sigma = 1.0;

  RowVector predict(const Matrix& Xq, Exec policy = Exec::parallel) const;
};

KrrPredictor centralized_krr(const Matrix& X, const RowVector& y, double lambda,
                             double sigma, Exec policy = Exec::parallel);

// Centralized random-feature ridge theta = (Z Z' + lambda N I)^-1 Z y'; the
// J = 1 degeneration of the decentralized solver.
struct RffRidgePredictor {
  FeatureSpec spec;
  Vector theta;

  RowVector predict(const Matrix& Xq, Exec policy = Exec::parallel) const;
};

RffRidgePredictor rff_ridge(const FeatureSpec& spec, const Matrix& X,
                            const RowVector& y, double lambda,
                            Exec policy = Exec::parallel);

// Comparison methods, all sharing the same simulator, solver, shards, and
// topology so differences isolate the feature-selection policy:
//   dkla_rff    — one plain random spec, sampled once, installed everywhere
//                 (shared-feature stand-in for the data-independent method);
//   dkla_ddrf   — candidates scored on the single largest node only, the
//                 selected spec broadcast to all nodes;
//   dekrr_ddrf  — every node selects from its own training shard.
enum class Method { dkla_rff, dkla_ddrf, dekrr_ddrf };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Everything one decentralized training run needs besides data and topology.
struct RunSpec {
  double lambda = 1e-6;
  double sigma = 1.0;
  double c_nei = 1.0;         // absolute (already resolved) neighbor penalty
  double c_self_mult = 5.0;   // c_self = mult * c_nei
  MappingKind mapping = MappingKind::cos_with_phase;
  std::vector<Index> D_js;    // per-node feature counts
  Index d0_ratio = 20;        // candidate pool size = d0_ratio * D_j
  double epsilon = 1e-6;
  int kmax = 2000;
  std::uint64_t seed = 0;
  Exec policy = Exec::parallel;
};

// Builds per-node specs for the method, runs the exchange and the rounds.
// `probe` (optional, d x M) installs the per-round consensus diagnostic.
TrainResult run_method(Method method, const RunSpec& rs, const Topology& topo,
                       const std::vector<Shard>& shards,
                       const Matrix* probe = nullptr);

// Every node predicts its own test shard; errors pool into one RSE against
// the global test-target mean.
double pooled_test_rse(const std::vector<NodeState>& states,
                       Exec policy = Exec::parallel);

// M columns drawn (seeded, with replacement) from the union of test shards.
Matrix probe_set(const std::vector<Shard>& shards, Index M, std::uint64_t seed);

// max over edges (j,p) of mean_m |f_j(x_m) - f_p(x_m)| on the probe columns.
double consensus_disagreement(const std::vector<NodeState>& states,
                              const Topology& topo, const Matrix& probe);

struct CvResult {
  double lambda = 0, sigma = 0;
  double best_rse = 0;
};

// Seeded k-fold grid search minimizing mean validation RSE of a centralized
// random-feature ridge surrogate (D_surrogate features per sigma). Ties
// break toward larger lambda, then larger sigma.
CvResult cross_validate(const Dataset& ds, const std::vector<double>& lambdas,
                        const std::vector<double>& sigmas, int folds,
                        std::uint64_t seed, Index D_surrogate = 500,
                        MappingKind mapping = MappingKind::cos_with_phase,
                        Exec policy = Exec::parallel);

}  // namespace dekrr
