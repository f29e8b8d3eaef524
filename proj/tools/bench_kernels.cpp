// Serial-vs-parallel timing for the three hot kernels, plus a bitwise
// equality check between the two execution policies. On a single-core
// machine the speedup column will sit near 1.

#include <chrono>
#include <cstdio>
#include <random>

#include "dekrr/eval.hpp"
#include "dekrr/features.hpp"
#include "dekrr/parallel.hpp"
#include "dekrr/rng.hpp"

using namespace dekrr;

namespace {

Matrix random_points(Index d, Index n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(d, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < d; ++i) X(i, j) = u(rng);
  return X;
}

template <class F>
double best_ms(F&& f, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-16s serial %8.1f ms   parallel %8.1f ms   speedup %.2fx   max|diff| %g\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
  if (diff != 0.0) {
    std::printf("FATAL: policies disagree on %s\n", name);
    std::exit(1);
  }
}

}  // namespace

int main() {
  const Index d = 8;

  {
    const Index D = 1000, n = 2000;
    FeatureSpec spec = sample_gaussian_features(d, D, 1.0, 11, MappingKind::cos_with_phase);
    Matrix X = random_points(d, n, 21);
    Matrix Zs, Zp;
    double ts = best_ms([&] { Zs = feature_matrix(spec, X, Exec::serial); });
    double tp = best_ms([&] { Zp = feature_matrix(spec, X, Exec::parallel); });
    report("feature_matrix", ts, tp, (Zs - Zp).cwiseAbs().maxCoeff());
  }

  {
    const Index n = 1200;
    Matrix X = random_points(d, n, 22);
    Matrix Ks, Kp;
    double ts = best_ms([&] { Ks = gaussian_gram(X, X, 1.0, Exec::serial); });
    double tp = best_ms([&] { Kp = gaussian_gram(X, X, 1.0, Exec::parallel); });
    report("gaussian_gram", ts, tp, (Ks - Kp).cwiseAbs().maxCoeff());
  }

  {
    const Index D0 = 20000, n = 2000;
    Matrix X = random_points(d, n, 23);
    RowVector y = random_points(1, n, 24).row(0);
    CandidatePool ps = make_candidate_pool(d, D0, 1.0, 12, MappingKind::cos_with_phase);
    CandidatePool pp = ps;
    double ts = best_ms([&] { score_features(ps, X, y, Exec::serial); });
    double tp = best_ms([&] { score_features(pp, X, y, Exec::parallel); });
    report("score_features", ts, tp, (ps.scores - pp.scores).cwiseAbs().maxCoeff());
  }

  return 0;
}
