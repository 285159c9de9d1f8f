#pragma once

#include <cstdint>
#include <functional>

namespace oocs {

/// Number of worker threads used by the parallel kernels. Defaults to the
/// OOCS_THREADS environment variable, else 1.
int num_threads();
void set_num_threads(int n);

/// Splits [0, count) into contiguous blocks, one per thread, and calls
/// body(begin, end) on each. Every index is visited by exactly one call, so
/// any per-index reduction keeps a fixed order regardless of thread count.
void parallel_for(std::int64_t count,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace oocs
