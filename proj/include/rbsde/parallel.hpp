#pragma once

#include <cstddef>
#include <functional>

namespace rbsde {

/// Worker count from RBSDE_THREADS (default 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker, so
/// results are identical for every thread count as long as body(i) only writes
/// slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_parallel = 1024);

}  // namespace rbsde
