#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dekrr/common.hpp"
#include "dekrr/dataset.hpp"
#include "dekrr/eval.hpp"
#include "dekrr/features.hpp"
#include "dekrr/graph.hpp"
#include "dekrr/rng.hpp"

using namespace dekrr;

namespace {

Matrix uniform_points(Index d, Index n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(d, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < d; ++i) X(i, j) = u(rng);
  return X;
}

// Equal-size shards over a planted single-frequency target y = cos(w*'x).
std::vector<Shard> planted_shards(int J, Index n_train, Index n_test, Index d,
                                  const Vector& wstar, std::uint64_t seed) {
  std::vector<Shard> shards(J);
  for (int j = 0; j < J; ++j) {
    Shard& sh = shards[j];
    sh.node = j;
    sh.x_train = uniform_points(d, n_train, seed + 10 * j);
    sh.x_test = uniform_points(d, n_test, seed + 10 * j + 5);
    sh.y_train = (wstar.transpose() * sh.x_train).array().cos().matrix();
    sh.y_test = (wstar.transpose() * sh.x_test).array().cos().matrix();
  }
  return shards;
}

Vector planted_direction(Index d, double norm, std::uint64_t seed) {
  Vector w = sample_gaussian_features(d, 1, 1.0, seed, MappingKind::paired_cos_sin)
                 .omega.row(0);
  return norm * w / w.norm();
}

}  // namespace

TEST_CASE("rse: hand examples and guards") {
  RowVector t(3), exact(3), off(3), mean(3);
  t << 1, 2, 3;
  exact << 1, 2, 3;
  off << 1, 2, 4;   // squared error 1 over target energy 2
  mean << 2, 2, 2;  // the mean predictor scores exactly 1
  CHECK(rse(exact, t) == 0.0);
  CHECK(rse(off, t) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rse(mean, t) == doctest::Approx(1.0).epsilon(1e-14));

  RowVector two(2);
  two << 1, 2;
  CHECK_THROWS_AS(rse(two, t), Error);  // length mismatch
  RowVector one(1), one_t(1);
  one << 1;
  one_t << 1;
  CHECK_THROWS_AS(rse(one, one_t), Error);  // too short
  RowVector flat(3);
  flat << 5, 5, 5;
  CHECK_THROWS_AS(rse(exact, flat), Error);  // degenerate targets
}

TEST_CASE("gaussian_gram: hand values, symmetry, policy equivalence") {
  Matrix A(1, 2);
  A << 0, 1;
  Matrix G = gaussian_gram(A, A, 1.0);
  CHECK(G(0, 0) == 1.0);
  CHECK(G(1, 1) == 1.0);
  CHECK(G(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(G(0, 1) == G(1, 0));

  Matrix B = uniform_points(3, 17, 900);
  Matrix C = uniform_points(3, 9, 901);
  Matrix Gs = gaussian_gram(B, C, 0.7, Exec::serial);
  Matrix Gp = gaussian_gram(B, C, 0.7, Exec::parallel);
  CHECK(Gs.rows() == 17);
  CHECK(Gs.cols() == 9);
  CHECK((Gs - Gp).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(gaussian_gram(B, C, 0.0), Error);
}

TEST_CASE("centralized_krr: single point, shrinkage, residual, interpolation") {
  Matrix X1(2, 1);
  X1 << 0.3, 0.4;
  RowVector y1(1);
  y1 << 2.0;
  KrrPredictor p1 = centralized_krr(X1, y1, 0.5, 1.0);
  // K = [1], N = 1: alpha = y / (1 + lambda)
  CHECK(p1.alpha(0) == doctest::Approx(2.0 / 1.5).epsilon(1e-12));

  Matrix X = uniform_points(2, 40, 910);
  RowVector y = uniform_points(1, 40, 911).row(0);
  double prev_norm = 1e300;
  for (double lambda : {1e-6, 1e-3, 1e-1, 10.0}) {
    KrrPredictor p = centralized_krr(X, y, lambda, 0.8);
    CHECK(p.alpha.norm() < prev_norm);
    prev_norm = p.alpha.norm();
    // alpha solves (K + lambda N I) alpha = y'
    Matrix K = gaussian_gram(X, X, 0.8);
    Vector resid = (K + lambda * 40.0 * Matrix::Identity(40, 40)) * p.alpha -
                   y.transpose();
    CHECK(resid.cwiseAbs().maxCoeff() <= 1e-8);
  }

  // vanishing ridge interpolates the training data; a narrow kernel keeps
  // the kernel matrix well conditioned enough for the dense solve
  Matrix Xs = uniform_points(2, 20, 912);
  RowVector ys = uniform_points(1, 20, 913).row(0);
  KrrPredictor pi = centralized_krr(Xs, ys, 1e-12, 0.15);
  CHECK(rse(pi.predict(Xs), ys) <= 1e-6);
}

TEST_CASE("centralized_krr: dense-solve guard names the remedy") {
  Matrix X = Matrix::Zero(2, 10001);
  RowVector y = RowVector::Zero(10001);
  try {
    centralized_krr(X, y, 1e-3, 1.0);
    FAIL("expected the size guard to trigger");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("subsampl") != std::string::npos);
  }
}

TEST_CASE("rff_ridge: normal equations and prediction identity") {
  const Index D = 12, N = 30;
  Matrix X = uniform_points(3, N, 920);
  RowVector y = uniform_points(1, N, 921).row(0);
  FeatureSpec spec =
      sample_gaussian_features(3, D, 1.0, 922, MappingKind::cos_with_phase);
  const double lambda = 1e-4;
  RffRidgePredictor p = rff_ridge(spec, X, y, lambda);

  Matrix Z = feature_matrix(spec, X);
  Vector resid = (Z * Z.transpose() + lambda * N * Matrix::Identity(D, D)) *
                     p.theta -
                 Z * y.transpose();
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);

  Matrix Xq = uniform_points(3, 7, 923);
  RowVector manual = p.theta.transpose() * feature_matrix(spec, Xq);
  CHECK((p.predict(Xq) - manual).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::dkla_rff, Method::dkla_ddrf, Method::dekrr_ddrf})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK_THROWS_AS(method_from_name("unknown_method"), Error);
}

TEST_CASE("run_method: lone-node shared-spec run equals centralized ridge") {
  // with J = 1 the consensus objective degenerates to (1/N)||fit||^2
  // + lambda ||theta||^2, whose minimizer is exactly rff_ridge at the same
  // lambda; the fixed point the rounds converge to must agree.
  Topology solo{1, {{}}};
  Vector wstar = planted_direction(3, 4.0, 930);
  auto shards = planted_shards(1, 60, 30, 3, wstar, 931);

  RunSpec rs;
  rs.lambda = 1e-5;
  rs.sigma = 0.5;
  // with no neighbors the self-anchor is pure damping: keep it small so the
  // relaxation contracts quickly (the fixed point does not depend on it)
  rs.c_nei = 1.0;
  rs.c_self_mult = 1.0;
  rs.D_js = {16};
  rs.epsilon = 1e-12;
  rs.kmax = 5000;
  rs.seed = 77;
  TrainResult r = run_method(Method::dkla_rff, rs, solo, shards);
  REQUIRE(r.reason == StopReason::tolerance);

  FeatureSpec spec = sample_gaussian_features(
      3, 16, rs.sigma, derive_seed(rs.seed, Stream::plain_features),
      rs.mapping);
  CHECK(spec.omega == r.states[0].spec.omega);  // same stream, same spec
  RffRidgePredictor ridge = rff_ridge(spec, shards[0].x_train,
                                      shards[0].y_train, rs.lambda);
  CHECK((r.states[0].theta - ridge.theta).norm() <=
        1e-6 * std::max(1.0, ridge.theta.norm()));
  const double rse_run = pooled_test_rse(r.states);
  const double rse_ridge = rse(ridge.predict(shards[0].x_test), shards[0].y_test);
  CHECK(std::abs(rse_run - rse_ridge) <= 1e-6);
}

TEST_CASE("run_method: the three methods move identical per-round traffic") {
  Topology topo = ring_lattice(4, 2);
  Vector wstar = planted_direction(2, 6.0, 940);
  auto shards = planted_shards(4, 30, 15, 2, wstar, 941);
  RunSpec rs;
  rs.lambda = 1e-5;
  rs.sigma = 0.25;
  rs.c_nei = 120.0;
  rs.D_js = {8, 8, 8, 8};
  rs.kmax = 50;
  rs.seed = 99;
  std::vector<std::uint64_t> per_round;
  for (Method m : {Method::dkla_rff, Method::dkla_ddrf, Method::dekrr_ddrf}) {
    TrainResult r = run_method(m, rs, topo, shards);
    per_round.push_back(r.per_round_scalars);
    CHECK(r.rounds() >= 1);
    CHECK(std::isfinite(pooled_test_rse(r.states)));
  }
  CHECK(per_round[0] == 4u * 2u * 8u);  // J x degree x feature_dim
  CHECK(per_round[1] == per_round[0]);
  CHECK(per_round[2] == per_round[0]);
}

TEST_CASE("run_method: shared-spec methods reject uneven feature budgets") {
  Topology topo = ring_lattice(3, 2);
  Vector wstar = planted_direction(2, 6.0, 950);
  auto shards = planted_shards(3, 20, 10, 2, wstar, 951);
  RunSpec rs;
  rs.c_nei = 60.0;
  rs.D_js = {8, 10, 8};
  rs.kmax = 5;
  CHECK_THROWS_AS(run_method(Method::dkla_rff, rs, topo, shards), Error);
  CHECK_THROWS_AS(run_method(Method::dkla_ddrf, rs, topo, shards), Error);
  TrainResult r = run_method(Method::dekrr_ddrf, rs, topo, shards);  // fine
  CHECK(r.states[1].spec.D() == 10);
}

TEST_CASE("run_method: own-shard selection beats the plain shared spec") {
  // same oscillatory planted target the feature suite uses; data-dependent
  // selection should win on pooled test error in at least 8 of 10 seeds
  Topology topo = ring_lattice(4, 2);
  const Index d = 2;
  RunSpec rs;
  rs.lambda = 1e-6;
  rs.sigma = 0.25;
  rs.c_nei = 160.0;
  rs.D_js = {10, 10, 10, 10};
  rs.epsilon = 1e-8;
  rs.kmax = 2000;
  int wins = 0;
  for (int s = 0; s < 10; ++s) {
    Vector wstar = planted_direction(d, 6.0, 960 + 100 * s);
    auto shards = planted_shards(4, 40, 20, d, wstar, 961 + 100 * s);
    rs.seed = 962 + 100 * s;
    TrainResult plain = run_method(Method::dkla_rff, rs, topo, shards);
    TrainResult own = run_method(Method::dekrr_ddrf, rs, topo, shards);
    if (pooled_test_rse(own.states) <= pooled_test_rse(plain.states)) ++wins;
  }
  CHECK(wins >= 8);
}

TEST_CASE("pooled_test_rse: equals the concatenated-error formula") {
  Topology topo = ring_lattice(3, 2);
  Vector wstar = planted_direction(2, 3.0, 970);
  auto shards = planted_shards(3, 15, 6, 2, wstar, 971);
  RunSpec rs;
  rs.c_nei = 45.0;
  rs.D_js = {5, 5, 5};
  rs.kmax = 30;
  rs.seed = 5;
  TrainResult r = run_method(Method::dekrr_ddrf, rs, topo, shards);

  std::vector<double> errs, targets;
  for (const auto& st : r.states) {
    RowVector f = st.theta.transpose() * feature_matrix(st.spec, st.shard.x_test);
    for (Index i = 0; i < f.size(); ++i) {
      errs.push_back(f(i) - st.shard.y_test(i));
      targets.push_back(st.shard.y_test(i));
    }
  }
  double mean = 0;
  for (double t : targets) mean += t;
  mean /= static_cast<double>(targets.size());
  double num = 0, den = 0;
  for (size_t i = 0; i < errs.size(); ++i) {
    num += errs[i] * errs[i];
    den += (targets[i] - mean) * (targets[i] - mean);
  }
  CHECK(pooled_test_rse(r.states) ==
        doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("probe_set: shape, determinism, membership, guards") {
  Vector wstar = planted_direction(3, 2.0, 980);
  auto shards = planted_shards(4, 10, 6, 3, wstar, 981);
  Matrix P1 = probe_set(shards, 50, 123);
  Matrix P2 = probe_set(shards, 50, 123);
  Matrix P3 = probe_set(shards, 50, 124);
  CHECK(P1.rows() == 3);
  CHECK(P1.cols() == 50);
  CHECK(P1 == P2);
  CHECK(P1 != P3);

  // every probe column is one of the test columns
  for (Index c = 0; c < P1.cols(); ++c) {
    bool found = false;
    for (const auto& sh : shards)
      for (Index t = 0; t < sh.x_test.cols(); ++t)
        if ((P1.col(c) - sh.x_test.col(t)).cwiseAbs().maxCoeff() == 0.0)
          found = true;
    CHECK(found);
  }

  CHECK_THROWS_AS(probe_set(shards, 0, 1), Error);
  auto empty = shards;
  for (auto& sh : empty) {
    sh.x_test = Matrix(3, 0);
    sh.y_test = RowVector(0);
  }
  CHECK_THROWS_AS(probe_set(empty, 10, 1), Error);
}

TEST_CASE("consensus_disagreement: zero cases and penalty monotonicity") {
  Topology topo = ring_lattice(4, 2);
  Vector wstar = planted_direction(2, 6.0, 990);
  auto shards = planted_shards(4, 30, 15, 2, wstar, 991);
  Matrix probe = probe_set(shards, 64, 7);

  // identical specs and coefficients disagree nowhere
  RunSpec rs;
  rs.sigma = 0.25;
  rs.c_nei = 120.0;
  rs.D_js = {8, 8, 8, 8};
  rs.kmax = 10;
  rs.seed = 31;
  TrainResult shared = run_method(Method::dkla_rff, rs, topo, shards);
  auto clones = shared.states;
  for (auto& st : clones) st.theta = shared.states[0].theta;
  CHECK(consensus_disagreement(clones, topo, probe) == 0.0);

  // a lone node has no edges to disagree across
  Topology solo{1, {{}}};
  std::vector<NodeState> one = {shared.states[0]};
  CHECK(consensus_disagreement(one, solo, probe) == 0.0);

  // stronger coupling leaves less disagreement at termination
  RunSpec weak = rs, strong = rs;
  weak.c_nei = 60.0;      // N / 2
  strong.c_nei = 1200.0;  // 10 N
  weak.kmax = strong.kmax = 400;
  weak.epsilon = strong.epsilon = 1e-10;
  TrainResult rw = run_method(Method::dekrr_ddrf, weak, topo, shards);
  TrainResult rsg = run_method(Method::dekrr_ddrf, strong, topo, shards);
  const double dw = consensus_disagreement(rw.states, topo, probe);
  const double dsg = consensus_disagreement(rsg.states, topo, probe);
  CHECK(dsg < dw);
  CHECK(dsg >= 0.0);
}

TEST_CASE("run_method: probe argument fills the disagreement column") {
  Topology topo = ring_lattice(3, 2);
  Vector wstar = planted_direction(2, 4.0, 995);
  auto shards = planted_shards(3, 20, 10, 2, wstar, 996);
  Matrix probe = probe_set(shards, 32, 9);
  RunSpec rs;
  rs.c_nei = 60.0;
  rs.D_js = {6, 6, 6};
  rs.kmax = 20;
  rs.seed = 12;
  TrainResult r = run_method(Method::dekrr_ddrf, rs, topo, shards, &probe);
  REQUIRE(r.log.size() >= 2);
  bool any_positive = false;
  for (const auto& e : r.log) {
    if (e.disagreement > 0) any_positive = true;
    // cross-check the logged value at the final round
  }
  CHECK(any_positive);
  CHECK(r.log.back().disagreement ==
        doctest::Approx(consensus_disagreement(r.states, topo, probe))
            .epsilon(1e-12));
}

TEST_CASE("cross_validate: degenerate grid and determinism") {
  const Index N = 60, d = 2;
  Dataset ds;
  ds.x = uniform_points(d, N, 1000).transpose();
  ds.y = uniform_points(1, N, 1001).row(0).transpose();
  ds.name = "toy";

  CvResult one = cross_validate(ds, {1e-3}, {0.5}, 3, 42, 50);
  CHECK(one.lambda == 1e-3);
  CHECK(one.sigma == 0.5);
  CHECK(one.best_rse > 0);

  CvResult a = cross_validate(ds, {1e-4, 1e-2}, {0.5, 1.0}, 3, 42, 50);
  CvResult b = cross_validate(ds, {1e-4, 1e-2}, {0.5, 1.0}, 3, 42, 50);
  CHECK(a.lambda == b.lambda);
  CHECK(a.sigma == b.sigma);
  CHECK(a.best_rse == b.best_rse);

  CHECK_THROWS_AS(cross_validate(ds, {}, {0.5}, 3, 42, 50), Error);
  CHECK_THROWS_AS(cross_validate(ds, {1e-3}, {0.5}, 1, 42, 50), Error);
}

TEST_CASE("cross_validate: recovers the planted kernel width") {
  // labels generated by a random-feature function at sigma = 1 plus small
  // noise; the grid search should land within one octave of the truth
  const Index N = 400, d = 3;
  Matrix X = uniform_points(d, N, 1010);
  FeatureSpec gen =
      sample_gaussian_features(d, 50, 1.0, 1011, MappingKind::cos_with_phase);
  Vector theta = uniform_points(50, 1, 1012).col(0);
  RowVector y = theta.transpose() * feature_matrix(gen, X);
  auto rng = make_rng(1013);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (Index i = 0; i < N; ++i) y(i) += noise(rng);

  Dataset ds;
  ds.x = X.transpose();
  ds.y = y.transpose();
  ds.name = "planted";

  CvResult best = cross_validate(ds, {1e-8, 1e-6, 1e-4, 1e-2},
                                 {0.25, 0.5, 1.0, 2.0, 4.0}, 5, 2024, 200);
  CHECK(best.sigma >= 0.5);
  CHECK(best.sigma <= 2.0);
  CHECK(best.best_rse < 0.1);
}
