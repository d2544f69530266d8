#pragma once

#include <cstddef>
#include <functional>

namespace coneflow {

/// How independent work items are scheduled. Serial is the reference path;
/// Parallel distributes items over OpenMP threads. Results are written by
/// item index, so both paths produce identical output.
enum class Execution { Serial, Parallel };

/// Runs body(i) for i in [0, n). An exception thrown by any item is
/// rethrown after the loop (the one from the lowest index wins).
void for_each_index(std::size_t n, Execution ex, const std::function<void(std::size_t)>& body);

/// Thread count used by Execution::Parallel (0 restores the runtime default).
void set_parallel_threads(int threads);
int parallel_threads();

}  // namespace coneflow
