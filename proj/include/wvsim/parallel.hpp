#pragma once
#include <cstddef>
#include <functional>

namespace wvsim {

/// Worker count: WVSIM_THREADS if set and > 0, otherwise hardware concurrency.
int thread_budget();

/// Runs fn(begin, end) over [0, n) split into contiguous ranges, one per worker.
/// Ranges are disjoint, so writes to per-index output slots stay deterministic
/// regardless of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace wvsim
