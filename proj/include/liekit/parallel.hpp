#ifndef LIEKIT_PARALLEL_HPP
#define LIEKIT_PARALLEL_HPP

// Thin OpenMP wrapper.  Batch kernels are written so every iteration depends
// only on its index (per-index Rng::fork streams, separate output slots);
// running them serially or in parallel must produce identical bytes.

#include <cstddef>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace liekit {

// Number of worker threads: the OpenMP default, optionally capped by the
// LIEKIT_THREADS environment variable.  1 when built without OpenMP.
inline int worker_count() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
  if (const char* cap = std::getenv("LIEKIT_THREADS")) {
    int c = std::atoi(cap);
    if (c >= 1 && c < n) n = c;
  }
  return n;
#else
  return 1;
#endif
}

// Runs fn(i) for every i in [0, n).  fn must not throw (an exception leaving
// an OpenMP region aborts the process); record failures in the output slot
// instead.  With parallel=false this is a plain serial loop.
template <class F>
void parallel_for(std::size_t n, F&& fn, bool parallel = true) {
#ifdef _OPENMP
  if (parallel && n > 1) {
    const int threads = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)parallel;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace liekit

#endif
