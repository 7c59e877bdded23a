#pragma once

#include <cstddef>
#include <functional>

namespace spinal {

// Worker count: hardware concurrency, capped by SPINAL_THREADS when set.
unsigned worker_count();

// Runs body(worker, i) for i in [0, n). Work is split into contiguous chunks,
// one per worker; worker ids are in [0, worker_count()). Results must be
// written to per-index slots so reductions stay scheduling-independent.
// The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(unsigned worker, std::size_t i)>& body);

}  // namespace spinal
