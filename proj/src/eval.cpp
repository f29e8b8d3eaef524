#include "dekrr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "dekrr/rng.hpp"

namespace dekrr {

double rse(const RowVector& predictions, const RowVector& targets) {
  require(predictions.size() == targets.size(), "rse: length mismatch");
  require(targets.size() >= 2, "rse: need at least 2 targets");
  const double mean = targets.mean();
  const double denom = (targets.array() - mean).square().sum();
  require(denom > 0, "rse: targets are all identical");
  return (predictions - targets).squaredNorm() / denom;
}

Matrix gaussian_gram(const Matrix& A, const Matrix& B, double sigma, Exec policy) {
  require(A.rows() == B.rows(), "gaussian_gram: dimension mismatch");
  require(sigma > 0, "gaussian_gram: sigma must be positive");
  const Index m = A.cols(), n = B.cols();
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Matrix K(m, n);
  par_for(policy, n, [&](std::ptrdiff_t j) {
    for (Index i = 0; i < m; ++i)
      K(i, j) = std::exp(-(A.col(i) - B.col(j)).squaredNorm() * inv);
  });
  return K;
}

RowVector KrrPredictor::predict(const Matrix& Xq, Exec policy) const {
  return alpha.transpose() * gaussian_gram(X, Xq, sigma, policy);
}

KrrPredictor centralized_krr(const Matrix& X, const RowVector& y, double lambda,
                             double sigma, Exec policy) {
  const Index N = X.cols();
  require(N >= 1, "centralized_krr: empty data");
  require(N <= 10000,
          "centralized_krr: N > 10^4 would need a dense " + std::to_string(N) + "^2 "
          "solve; subsample or use the random-feature ridge instead");
  Matrix K = gaussian_gram(X, X, sigma, policy);
  Matrix A = K;
  A.diagonal().array() += lambda * static_cast<double>(N);
  Eigen::LLT<Matrix> llt(A);
  require(llt.info() == Eigen::Success, "centralized_krr: factorization failed");
  KrrPredictor pred;
  pred.X = X;
  pred.sigma = sigma;
  pred.alpha = llt.solve(y.transpose());
  return pred;
}

RowVector RffRidgePredictor::predict(const Matrix& Xq, Exec policy) const {
  return theta.transpose() * feature_matrix(spec, Xq, policy);
}

RffRidgePredictor rff_ridge(const FeatureSpec& spec, const Matrix& X,
                            const RowVector& y, double lambda, Exec policy) {
  const Index N = X.cols();
  require(N >= 1, "rff_ridge: empty data");
  Matrix Z = feature_matrix(spec, X, policy);
  Matrix A = Z * Z.transpose();
  A.diagonal().array() += lambda * static_cast<double>(N);
  Eigen::LLT<Matrix> llt(A);
  require(llt.info() == Eigen::Success, "rff_ridge: factorization failed");
  RffRidgePredictor pred;
  pred.spec = spec;
  pred.theta = llt.solve(Z * y.transpose());
  return pred;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::dkla_rff: return "dkla_rff";
    case Method::dkla_ddrf: return "dkla_ddrf";
    case Method::dekrr_ddrf: return "dekrr_ddrf";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "dkla_rff") return Method::dkla_rff;
  if (name == "dkla_ddrf") return Method::dkla_ddrf;
  if (name == "dekrr_ddrf") return Method::dekrr_ddrf;
  throw Error("unknown method '" + name + "'");
}

namespace {

// Per-node feature specs for one method. Shared-spec methods require a
// uniform feature count.
std::vector<FeatureSpec> method_specs(Method method, const RunSpec& rs,
                                      const std::vector<Shard>& shards) {
  const int J = static_cast<int>(shards.size());
  const Index d = shards[0].x_train.rows();
  std::vector<FeatureSpec> specs(J);
  auto require_uniform = [&]() {
    for (Index Dj : rs.D_js)
      require(Dj == rs.D_js[0],
              std::string(method_name(method)) +
                  " uses one shared spec and needs equal per-node feature counts");
    return rs.D_js[0];
  };
  switch (method) {
    case Method::dkla_rff: {
      const Index D = require_uniform();
      FeatureSpec spec = sample_gaussian_features(
          d, D, rs.sigma, derive_seed(rs.seed, Stream::plain_features), rs.mapping);
      for (int j = 0; j < J; ++j) specs[j] = spec;
      break;
    }
    case Method::dkla_ddrf: {
      const Index D = require_uniform();
      // the node with the most training data does the selection
      int big = 0;
      for (int j = 1; j < J; ++j)
        if (shards[j].n_train() > shards[big].n_train()) big = j;
      CandidatePool pool = make_candidate_pool(
          d, rs.d0_ratio * D, rs.sigma,
          derive_seed(rs.seed, Stream::candidate_features, big), rs.mapping);
      score_features(pool, shards[big].x_train, shards[big].y_train, rs.policy);
      FeatureSpec spec = select_top(pool, D);
      for (int j = 0; j < J; ++j) specs[j] = spec;
      break;
    }
    case Method::dekrr_ddrf: {
      for (int j = 0; j < J; ++j) {
        CandidatePool pool = make_candidate_pool(
            shards[j].x_train.rows(), rs.d0_ratio * rs.D_js[j], rs.sigma,
            derive_seed(rs.seed, Stream::candidate_features, j), rs.mapping);
        score_features(pool, shards[j].x_train, shards[j].y_train, rs.policy);
        specs[j] = select_top(pool, rs.D_js[j]);
      }
      break;
    }
  }
  return specs;
}

}  // namespace

TrainResult run_method(Method method, const RunSpec& rs, const Topology& topo,
                       const std::vector<Shard>& shards, const Matrix* probe) {
  const int J = topo.J;
  require(static_cast<int>(shards.size()) == J, "run_method: shard count != J");
  require(static_cast<int>(rs.D_js.size()) == J, "run_method: D_js size != J");

  auto specs = method_specs(method, rs, shards);

  double N = 0;
  for (const auto& sh : shards) N += static_cast<double>(sh.n_train());

  std::vector<NodeState> states(J);
  for (int j = 0; j < J; ++j) {
    states[j].id = j;
    states[j].shard = shards[j];
    states[j].spec = std::move(specs[j]);
    states[j].theta = Vector::Zero(states[j].spec.feature_dim());
    states[j].Zjj = feature_matrix(states[j].spec, shards[j].x_train, rs.policy);
  }

  PenaltyConfig pc = PenaltyConfig::uniform(J, rs.c_nei, rs.c_self_mult);
  const std::uint64_t setup = setup_exchange(states, topo, pc, rs.lambda, N, rs.policy);

  RunControl control;
  control.epsilon = rs.epsilon;
  control.kmax = rs.kmax;
  control.policy = rs.policy;
  if (probe) {
    // cache each node's probe features; specs are frozen for the whole run
    auto cache = std::make_shared<std::map<int, Matrix>>();
    Matrix probe_copy = *probe;
    Topology topo_copy = topo;
    control.disagreement = [cache, probe_copy,
                            topo_copy](const std::vector<NodeState>& sts) {
      for (const auto& st : sts)
        if (!cache->count(st.id))
          (*cache)[st.id] = feature_matrix(st.spec, probe_copy, Exec::serial);
      double worst = 0;
      for (auto [j, p] : topo_copy.edges()) {
        RowVector fj = sts[j].theta.transpose() * cache->at(sts[j].id);
        RowVector fp = sts[p].theta.transpose() * cache->at(sts[p].id);
        worst = std::max(worst, (fj - fp).cwiseAbs().mean());
      }
      return worst;
    };
  }
  TrainResult result = run(std::move(states), topo, pc, rs.lambda, N, control);
  result.setup_scalars = setup;
  return result;
}

double pooled_test_rse(const std::vector<NodeState>& states, Exec policy) {
  Index total = 0;
  for (const auto& st : states) total += st.shard.n_test();
  require(total >= 2, "pooled_test_rse: fewer than 2 test points overall");
  RowVector preds(total), targets(total);
  Index pos = 0;
  for (const auto& st : states) {
    const Index n = st.shard.n_test();
    if (n == 0) continue;
    preds.segment(pos, n) =
        st.theta.transpose() * feature_matrix(st.spec, st.shard.x_test, policy);
    targets.segment(pos, n) = st.shard.y_test;
    pos += n;
  }
  return rse(preds, targets);
}

Matrix probe_set(const std::vector<Shard>& shards, Index M, std::uint64_t seed) {
  require(M >= 1, "probe_set: M must be >= 1");
  Index total = 0;
  for (const auto& sh : shards) total += sh.n_test();
  require(total >= 1, "probe_set: no test points");
  const Index d = shards[0].x_test.rows();
  auto rng = make_rng(seed);
  std::uniform_int_distribution<Index> pick(0, total - 1);
  Matrix probe(d, M);
  for (Index m = 0; m < M; ++m) {
    Index r = pick(rng);
    for (const auto& sh : shards) {
      if (r < sh.n_test()) {
        probe.col(m) = sh.x_test.col(r);
        break;
      }
      r -= sh.n_test();
    }
  }
  return probe;
}

double consensus_disagreement(const std::vector<NodeState>& states,
                              const Topology& topo, const Matrix& probe) {
  require(probe.cols() >= 1, "consensus_disagreement: empty probe set");
  double worst = 0;
  for (auto [j, p] : topo.edges()) {
    RowVector fj = states[j].theta.transpose() *
                   feature_matrix(states[j].spec, probe, Exec::serial);
    RowVector fp = states[p].theta.transpose() *
                   feature_matrix(states[p].spec, probe, Exec::serial);
    worst = std::max(worst, (fj - fp).cwiseAbs().mean());
  }
  return worst;
}

CvResult cross_validate(const Dataset& ds, const std::vector<double>& lambdas,
                        const std::vector<double>& sigmas, int folds,
                        std::uint64_t seed, Index D_surrogate,
                        MappingKind mapping, Exec policy) {
  require(folds >= 2, "cross_validate: need at least 2 folds");
  require(!lambdas.empty() && !sigmas.empty(), "cross_validate: empty grid");
  const Index N = ds.rows();
  require(N >= folds, "cross_validate: more folds than rows");

  std::vector<Index> order(N);
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(derive_seed(seed, Stream::folds));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> fold_sizes(folds, N / folds);
  for (Index f = 0; f < N % folds; ++f) ++fold_sizes[f];

  Matrix Xall = ds.x.transpose();  // d x N, columns are points
  RowVector yall = ds.y.transpose();

  // mean validation RSE per (sigma, lambda)
  Matrix score = Matrix::Zero(static_cast<Index>(sigmas.size()),
                              static_cast<Index>(lambdas.size()));
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    FeatureSpec spec = sample_gaussian_features(
        ds.dim(), D_surrogate, sigmas[si],
        derive_seed(seed, Stream::plain_features, si), mapping);
    Matrix Z = feature_matrix(spec, Xall, policy);
    Matrix G_full = Z * Z.transpose();
    Vector b_full = Z * yall.transpose();

    Index pos = 0;
    for (int f = 0; f < folds; ++f) {
      const Index nv = fold_sizes[f];
      Matrix Zv(Z.rows(), nv);
      RowVector yv(nv);
      for (Index i = 0; i < nv; ++i) {
        Zv.col(i) = Z.col(order[pos + i]);
        yv(i) = yall(order[pos + i]);
      }
      pos += nv;
      const double n_tr = static_cast<double>(N - nv);
      Matrix G_tr = G_full - Zv * Zv.transpose();
      Vector b_tr = b_full - Zv * yv.transpose();
      for (std::size_t li = 0; li < lambdas.size(); ++li) {
        Matrix A = G_tr;
        A.diagonal().array() += lambdas[li] * n_tr;
        Eigen::LLT<Matrix> llt(A);
        require(llt.info() == Eigen::Success, "cross_validate: factorization failed");
        Vector theta = llt.solve(b_tr);
        score(static_cast<Index>(si), static_cast<Index>(li)) +=
            rse(theta.transpose() * Zv, yv) / folds;
      }
    }
  }

  CvResult best;
  bool have = false;
  for (std::size_t si = 0; si < sigmas.size(); ++si)
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const double v = score(static_cast<Index>(si), static_cast<Index>(li));
      const bool better =
          !have || v < best.best_rse ||
          (v == best.best_rse &&
           (lambdas[li] > best.lambda ||
            (lambdas[li] == best.lambda && sigmas[si] > best.sigma)));
      if (better) {
        best = {lambdas[li], sigmas[si], v};
        have = true;
      }
    }
  return best;
}

}  // namespace dekrr
