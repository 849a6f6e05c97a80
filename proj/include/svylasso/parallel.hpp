#pragma once

#include <algorithm>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace svylasso {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline bool in_parallel_region() {
#ifdef _OPENMP
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

// Reductions are accumulated per fixed-size chunk and combined in chunk
// order, so results are bit-identical for any thread count.
constexpr std::ptrdiff_t kReductionChunk = 4096;

inline std::ptrdiff_t num_chunks(std::ptrdiff_t n) {
  return n <= 0 ? 0 : (n + kReductionChunk - 1) / kReductionChunk;
}

// fn(chunk_index, begin, end); chunks may run on any thread.
template <class Fn>
void for_each_chunk(std::ptrdiff_t n, Fn&& fn) {
  const std::ptrdiff_t m = num_chunks(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 1 && !omp_in_parallel())
#endif
  for (std::ptrdiff_t c = 0; c < m; ++c) {
    const std::ptrdiff_t b = c * kReductionChunk;
    const std::ptrdiff_t e = std::min(n, b + kReductionChunk);
    fn(c, b, e);
  }
}

// Independent tasks indexed 0..n-1, e.g. CV folds or replications. Each task
// writes its own output slot; combination order is up to the caller.
template <class Fn>
void parallel_tasks(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (n > 1 && !omp_in_parallel())
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    fn(i);
  }
}

}  // namespace svylasso
