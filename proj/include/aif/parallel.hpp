#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aif {

/// Selects between the OpenMP kernels and their serial reference path.
/// Every kernel writes results into pre-sized slots indexed by work item, so
/// both paths produce bit-identical output.
struct Execution {
  bool parallel = true;
  int threads = 0;  // 0: OpenMP default

  static Execution serial() { return {false, 1}; }
  static Execution openmp(int threads = 0) { return {true, threads}; }
};

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_default_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs fn(i) for i in [0, n). Exceptions thrown by fn are rethrown after the
/// loop (the first one by index order wins).
template <typename Fn>
void parallel_for(std::size_t n, const Execution& exec, Fn&& fn) {
  if (!exec.parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#ifdef _OPENMP
  const int threads = exec.threads > 0 ? exec.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace aif
