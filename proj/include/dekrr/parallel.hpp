#pragma once
// Explicit element-wise parallelism with a serial twin.
//
// Every parallel loop in this library runs over independent output slots:
// iteration i writes slot i and reads only shared immutable inputs. Under
// that discipline the OpenMP schedule cannot change any result, so the
// serial and parallel policies produce bitwise-identical output. Tests and
// the benchmark tool rely on this; new call sites must keep the discipline.

#include <cstddef>

namespace dekrr {

enum class Exec { serial, parallel };

template <class F>
void par_for(Exec policy, std::ptrdiff_t n, F&& f) {
  if (policy == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  }
}

}  // namespace dekrr
