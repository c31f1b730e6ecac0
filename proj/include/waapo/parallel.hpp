#pragma once

#include <cstddef>
#include <functional>

namespace waapo {

// Worker count from WAAPO_THREADS (0 or unset = hardware concurrency).
std::size_t thread_budget();

// Runs body(0) .. body(count - 1) on up to `threads` workers. Each index is
// handled exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t threads = thread_budget());

}  // namespace waapo
