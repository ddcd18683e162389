#pragma once

#include <cstdint>

#ifdef LMB_HAVE_OPENMP
#include <omp.h>
#endif

// Parallel dispatch for the data-parallel kernels. Every kernel writes
// output[i] from inputs keyed only by i, so scheduling never changes results;
// serial and parallel variants are bitwise identical by construction and the
// tests hold them to that.

namespace lmb::exec {

namespace detail {
inline int& thread_limit() {
  static int limit = 0;  // 0 means library default
  return limit;
}
}  // namespace detail

inline void set_max_threads(int n) { detail::thread_limit() = n; }

inline int max_threads() {
  int limit = detail::thread_limit();
#ifdef LMB_HAVE_OPENMP
  int hw = omp_get_max_threads();
  if (limit <= 0 || limit > hw) return hw;
  return limit;
#else
  return limit <= 0 ? 1 : 1;
#endif
}

template <class F>
void serial_for(std::int64_t n, F&& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

template <class F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef LMB_HAVE_OPENMP
  const int threads = max_threads();
  if (threads > 1 && n > 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace lmb::exec
