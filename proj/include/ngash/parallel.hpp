#pragma once

#include <cstddef>
#include <functional>

namespace ngash {

// Worker count: NGASH_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Splits [0, count) into contiguous ranges and runs body(begin, end) on each,
// one range per worker. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ngash
