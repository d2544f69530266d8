#include "coneflow/execution.hpp"

#include <exception>
#include <limits>
#include <mutex>

#include <omp.h>

namespace coneflow {

namespace {
int g_default_threads = -1;
}

void for_each_index(std::size_t n, Execution ex, const std::function<void(std::size_t)>& body) {
  if (ex == Execution::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  std::size_t first_index = std::numeric_limits<std::size_t>::max();
  std::mutex mu;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

void set_parallel_threads(int threads) {
  if (g_default_threads < 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : g_default_threads);
}

int parallel_threads() { return omp_get_max_threads(); }

}  // namespace coneflow
