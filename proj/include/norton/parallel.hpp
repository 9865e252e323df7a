#pragma once

#include <cstddef>
#include <functional>

namespace norton {

// Parallelism cap: NORTON_THREADS if set to a positive integer, otherwise
// hardware concurrency. Always at least 1.
std::size_t thread_cap();

// Runs fn(i) for i in [0, count) across up to thread_cap() threads with a
// static block partition. Each index must write only to its own output slot;
// under that contract results are identical for any thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace norton
