#pragma once

#include <exception>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace curricula {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). With use_parallel the iterations run under
// OpenMP; every iteration must write only to its own slots, which keeps the
// result identical to the serial order for any thread count. The first
// exception thrown inside the region is rethrown after the loop.
template <typename F>
void parallel_for(int n, bool use_parallel, F&& body) {
  if (!use_parallel || n <= 1 || max_threads() <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < n; ++i) {
    if (err) continue;
    try {
      body(i);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace curricula
