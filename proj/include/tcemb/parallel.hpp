#pragma once

#include <cstddef>
#include <functional>

namespace tcemb {

/// Thread budget for intra-stage parallelism: the TC_THREADS environment
/// variable, clamped to [1, hardware concurrency]; 1 when unset.
int thread_budget();

/// Runs body(i) for i in [0, count). With a budget above 1 the indices
/// are processed by a small thread pool in fixed blocks; results must be
/// written to disjoint slots so the outcome is identical either way.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tcemb
