#pragma once

#include <cstddef>
#include <functional>

namespace cbf {

// Resolve a thread count request: explicit positive value wins, otherwise the
// CBF_THREADS environment variable, otherwise hardware concurrency.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) across the given number of worker threads.
// Work is pulled from a shared atomic counter, so per-index cost may vary.
// threads <= 1 degenerates to a plain serial loop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace cbf
