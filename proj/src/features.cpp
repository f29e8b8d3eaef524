#include "dekrr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "dekrr/rng.hpp"

namespace dekrr {

FeatureSpec sample_gaussian_features(Index d, Index D, double sigma,
                                     std::uint64_t seed, MappingKind kind) {
  require(D >= 1, "sample_gaussian_features: D must be >= 1");
  require(d >= 1, "sample_gaussian_features: d must be >= 1");
  require(sigma > 0, "sample_gaussian_features: sigma must be positive");
  FeatureSpec spec;
  spec.kind = kind;
  spec.sigma = sigma;
  spec.omega.resize(D, d);
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / sigma);
  for (Index i = 0; i < D; ++i)
    for (Index c = 0; c < d; ++c) spec.omega(i, c) = normal(rng);
  if (kind == MappingKind::cos_with_phase) {
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    spec.phase.resize(D);
    for (Index i = 0; i < D; ++i) spec.phase(i) = uni(rng);
  }
  return spec;
}

CandidatePool make_candidate_pool(Index d, Index D0, double sigma,
                                  std::uint64_t seed, MappingKind kind) {
  CandidatePool pool;
  pool.spec = sample_gaussian_features(d, D0, sigma, seed, kind);
  return pool;
}

Vector feature_map(const FeatureSpec& spec, const Vector& x) {
  require(x.size() == spec.dim(), "feature_map: dimension mismatch");
  const Index D = spec.D();
  Vector w = spec.omega * x;  // D projections
  Vector z(spec.feature_dim());
  if (spec.kind == MappingKind::paired_cos_sin) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    for (Index i = 0; i < D; ++i) {
      z(2 * i) = scale * std::cos(w(i));
      z(2 * i + 1) = scale * std::sin(w(i));
    }
  } else {
    const double scale = std::sqrt(2.0 / static_cast<double>(D));
    for (Index i = 0; i < D; ++i) z(i) = scale * std::cos(w(i) + spec.phase(i));
  }
  return z;
}

Matrix feature_matrix(const FeatureSpec& spec, const Matrix& X, Exec policy) {
  require(X.rows() == spec.dim(), "feature_matrix: dimension mismatch");
  require(X.cols() >= 1, "feature_matrix: empty input");
  const Index D = spec.D(), M = X.cols();
  Matrix W = spec.omega * X;  // D x M projections, shared by both policies
  Matrix Z(spec.feature_dim(), M);
  if (spec.kind == MappingKind::paired_cos_sin) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    par_for(policy, M, [&](std::ptrdiff_t m) {
      for (Index i = 0; i < D; ++i) {
        Z(2 * i, m) = scale * std::cos(W(i, m));
        Z(2 * i + 1, m) = scale * std::sin(W(i, m));
      }
    });
  } else {
    const double scale = std::sqrt(2.0 / static_cast<double>(D));
    par_for(policy, M, [&](std::ptrdiff_t m) {
      for (Index i = 0; i < D; ++i)
        Z(i, m) = scale * std::cos(W(i, m) + spec.phase(i));
    });
  }
  return Z;
}

void score_features(CandidatePool& pool, const Matrix& X, const RowVector& y,
                    Exec policy) {
  require(X.rows() == pool.spec.dim(), "score_features: dimension mismatch");
  require(X.cols() == y.size(), "score_features: X and y disagree on N");
  require(X.cols() >= 1, "score_features: empty data");
  const Index D0 = pool.D0(), N = X.cols();
  const double inv_n = 1.0 / static_cast<double>(N);
  Matrix W = pool.spec.omega * X;  // D0 x N projections
  pool.scores.resize(D0);
  const bool phased = pool.spec.kind == MappingKind::cos_with_phase;
  // Candidates are independent; each loop body writes only its own score and
  // accumulates in fixed serial order, so scores match the serial policy.
  par_for(policy, D0, [&](std::ptrdiff_t i) {
    if (phased) {
      const double b = pool.spec.phase(i);
      double c = 0;
      for (Index m = 0; m < N; ++m) c += y(m) * std::cos(W(i, m) + b);
      c *= inv_n;
      pool.scores(i) = c * c;
    } else {
      double c = 0, s = 0;
      for (Index m = 0; m < N; ++m) {
        c += y(m) * std::cos(W(i, m));
        s += y(m) * std::sin(W(i, m));
      }
      c *= inv_n;
      s *= inv_n;
      pool.scores(i) = c * c + s * s;
    }
  });
}

FeatureSpec select_top(const CandidatePool& pool, Index D) {
  require(pool.scored(), "select_top: pool has not been scored");
  require(D >= 1, "select_top: D must be >= 1");
  require(D <= pool.D0(), "select_top: D exceeds the candidate count");
  std::vector<Index> idx(pool.D0());
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    if (pool.scores(a) != pool.scores(b)) return pool.scores(a) > pool.scores(b);
    return a < b;  // tie: smaller sampling index first
  });
  FeatureSpec out;
  out.kind = pool.spec.kind;
  out.sigma = pool.spec.sigma;
  out.omega.resize(D, pool.spec.dim());
  if (out.kind == MappingKind::cos_with_phase) out.phase.resize(D);
  for (Index r = 0; r < D; ++r) {
    out.omega.row(r) = pool.spec.omega.row(idx[r]);
    if (out.kind == MappingKind::cos_with_phase) out.phase(r) = pool.spec.phase(idx[r]);
  }
  return out;
}

std::string feature_spec_to_json(const FeatureSpec& spec) {
  nlohmann::json j;
  j["sigma"] = spec.sigma;
  j["kind"] = spec.kind == MappingKind::paired_cos_sin ? "paired_cos_sin"
                                                       : "cos_with_phase";
  j["D"] = spec.D();
  j["d"] = spec.dim();
  std::vector<double> om(static_cast<std::size_t>(spec.D() * spec.dim()));
  for (Index i = 0; i < spec.D(); ++i)
    for (Index c = 0; c < spec.dim(); ++c)
      om[static_cast<std::size_t>(i * spec.dim() + c)] = spec.omega(i, c);
  j["omega"] = om;  // row-major
  if (spec.phase.size() > 0)
    j["phase"] = std::vector<double>(spec.phase.data(),
                                     spec.phase.data() + spec.phase.size());
  return j.dump();
}

FeatureSpec feature_spec_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  FeatureSpec spec;
  spec.sigma = j.at("sigma").get<double>();
  std::string kind = j.at("kind").get<std::string>();
  require(kind == "paired_cos_sin" || kind == "cos_with_phase",
          "feature_spec_from_json: unknown mapping kind '" + kind + "'");
  spec.kind = kind == "paired_cos_sin" ? MappingKind::paired_cos_sin
                                       : MappingKind::cos_with_phase;
  const Index D = j.at("D").get<Index>();
  const Index d = j.at("d").get<Index>();
  auto om = j.at("omega").get<std::vector<double>>();
  require(static_cast<Index>(om.size()) == D * d,
          "feature_spec_from_json: omega size mismatch");
  spec.omega.resize(D, d);
  for (Index i = 0; i < D; ++i)
    for (Index c = 0; c < d; ++c)
      spec.omega(i, c) = om[static_cast<std::size_t>(i * d + c)];
  if (spec.kind == MappingKind::cos_with_phase) {
    auto ph = j.at("phase").get<std::vector<double>>();
    require(static_cast<Index>(ph.size()) == D,
            "feature_spec_from_json: phase size mismatch");
    spec.phase = Eigen::Map<const Vector>(ph.data(), D);
  }
  return spec;
}

}  // namespace dekrr
