#pragma once

#include <cstddef>

namespace gmsfem {

/// Runtime switch between the OpenMP kernels and the serial reference path.
/// Both paths execute identical per-task arithmetic, so results are
/// bit-identical; the serial path is kept for testing and benchmarking.
bool parallel_enabled();
void set_parallel_enabled(bool on);

/// Number of workers the parallel path would use (1 without OpenMP).
int worker_count();

/// Fan out `body(i)` over i in [0, n). Tasks must be independent and write
/// to disjoint outputs.
template <class Body>
void parallel_for(std::size_t n, const Body& body) {
  if (parallel_enabled()) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      body(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

}  // namespace gmsfem
