#pragma once

#include <cstddef>
#include <functional>

namespace pflow {

/// Worker count used by parallel_for. Defaults to PFLOW_THREADS or 1.
int thread_count();
void set_thread_count(int threads);

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunk
/// boundaries never affect results: callers write disjoint outputs only.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace pflow
