#pragma once

#include <cstddef>
#include <functional>

namespace emfe {

/// Worker count: hardware concurrency, capped by the EMFE_THREADS environment variable.
std::size_t thread_budget();

/// Runs body(i) for i in [0, count) over up to `threads` workers.
/// Each index is processed exactly once; callers write results into
/// pre-sized slots so output order never depends on scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace emfe
