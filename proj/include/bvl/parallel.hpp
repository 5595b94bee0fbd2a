#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bvl {

// Index-parallel loop. jobs <= 1 runs the plain serial loop, which is the
// reference the OpenMP path is tested against; jobs == 0 means "all cores".
// Bodies must be independent per index so both paths produce identical
// results.
template <class Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
#ifdef _OPENMP
  if (jobs != 1 && n > 1) {
    int threads = jobs <= 0 ? omp_get_max_threads() : jobs;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  for (int i = 0; i < n; ++i) fn(i);
}

inline int hardware_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bvl
