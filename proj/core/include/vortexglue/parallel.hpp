#pragma once

#include <cstddef>
#include <functional>

namespace vortexglue {

/// Worker count used by parallel_for. Zero restores the hardware default.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// that need deterministic output must write into per-index storage and
/// reduce afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vortexglue
