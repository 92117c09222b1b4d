#pragma once

#include <cstddef>
#include <functional>

namespace riskmfg {

/// Worker count: RISKMFG_THREADS if set and positive, else the hardware concurrency.
unsigned worker_count();

/// Calls fn(begin, end) on contiguous chunks of [0, n). Results must not depend on the chunking.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace riskmfg
