#pragma once

#include <cstddef>
#include <functional>

namespace lyacanon {

/// Worker count: LYACANON_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write results into per-index slots and reduce sequentially afterwards, so
/// results do not depend on the thread count. The first exception thrown by
/// any body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lyacanon
