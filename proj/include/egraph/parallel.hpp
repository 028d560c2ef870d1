#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace egraph {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs body(i) for i in [0, n). With parallel = true the iterations are
/// distributed over OpenMP threads; the serial path is kept as the
/// reference implementation. Bodies must only touch their own slot, which
/// makes both paths produce bit-identical results.
template <typename Body>
void parallel_for(int n, Body&& body, bool parallel = true) {
#ifdef _OPENMP
  if (parallel && n > 1) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
#else
  (void)parallel;
#endif
  for (int i = 0; i < n; ++i) {
    body(i);
  }
}

}  // namespace egraph
