#pragma once

// Execution policy for the data-parallel kernels.  Every parallel loop in
// this library writes into per-index slots and reduces serially afterwards,
// so OpenMP runs produce bit-identical results to the serial reference
// regardless of thread count (controlled by OMP_NUM_THREADS).

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gsmp {

enum class Exec { Serial, OpenMP };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Apply fn(i) for i in [0, n).  The body must only touch state owned by i.
template <class F>
void for_each_index(std::ptrdiff_t n, Exec exec, F&& fn) {
#ifdef _OPENMP
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  (void)exec;
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

}  // namespace gsmp
