#pragma once

#include <cstddef>
#include <functional>

namespace metaloc {

/// Worker count from METALOC_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to `workers` threads. Each index must write only to its own
/// output slot; the first exception thrown by any index is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = worker_count());

} // namespace metaloc
