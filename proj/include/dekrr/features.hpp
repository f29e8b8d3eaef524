#pragma once
// Random Fourier features for the Gaussian kernel exp(-||x-x'||^2/(2*sigma^2)),
// plus data-dependent selection: over-sample a candidate pool, score each
// frequency against the labels, keep the top D.

#include <cstdint>
#include <string>

#include "dekrr/common.hpp"
#include "dekrr/parallel.hpp"

namespace dekrr {

// paired_cos_sin: z(x) = (1/sqrt(D)) [cos(w_i'x); sin(w_i'x)]_i, dim 2D.
// cos_with_phase: z(x) = sqrt(2/D) cos(w_i'x + b_i), dim D.
enum class MappingKind { paired_cos_sin, cos_with_phase };

struct FeatureSpec {
  Matrix omega;   // D x d, row i = frequency w_i
  Vector phase;   // length D when kind == cos_with_phase, else empty
  MappingKind kind = MappingKind::cos_with_phase;
  double sigma = 1.0;

  Index D() const { return omega.rows(); }
  Index dim() const { return omega.cols(); }
  Index feature_dim() const {
    return kind == MappingKind::paired_cos_sin ? 2 * D() : D();
  }
};

// D_0 over-sampled candidates plus (after scoring) one score per candidate.
struct CandidatePool {
  FeatureSpec spec;
  Vector scores;  // empty until scored

  Index D0() const { return spec.D(); }
  bool scored() const { return scores.size() == spec.D(); }
};

// Frequencies are i.i.d. N(0, sigma^-2 I_d); phases (phase mapping only) are
// i.i.d. uniform on [0, 2pi]. Deterministic under the seed.
FeatureSpec sample_gaussian_features(Index d, Index D, double sigma,
                                     std::uint64_t seed, MappingKind kind);

CandidatePool make_candidate_pool(Index d, Index D0, double sigma,
                                  std::uint64_t seed, MappingKind kind);

Vector feature_map(const FeatureSpec& spec, const Vector& x);

// Column m of the result is feature_map(spec, X.col(m)).
Matrix feature_matrix(const FeatureSpec& spec, const Matrix& X,
                      Exec policy = Exec::parallel);

// Label-alignment energy. For a paired pool the score of w is
//   S(w) = (mean_i y_i cos(w'x_i))^2 + (mean_i y_i sin(w'x_i))^2;
// for a phase pool the single term (mean_i y_i cos(w'x_i + b))^2 is used so
// the (w, b) pair is scored as it will be deployed. Nonnegative, independent
// of candidate order.
void score_features(CandidatePool& pool, const Matrix& X, const RowVector& y,
                    Exec policy = Exec::parallel);

// Keep the D best-scoring candidates, sorted by descending score; ties break
// toward the smaller sampling index. Requires a scored pool and D <= D_0.
FeatureSpec select_top(const CandidatePool& pool, Index D);

// JSON form (sigma, kind, row-major omega, phases) for spec exchange.
std::string feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const std::string& text);

}  // namespace dekrr
