#pragma once

#include <cstddef>
#include <functional>

namespace pmode {

// Worker count: PMODE_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
// handled exactly once; callers write results into per-index slots, so the
// outcome never depends on scheduling. Exceptions are rethrown (lowest index).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace pmode
