#pragma once

#include <cstddef>
#include <functional>

namespace vizsig {

/// Worker count used by the parallel sections of the library. Results never
/// depend on this value: every parallel loop writes to per-index slots and
/// reductions run afterwards in index order.
void set_threads(std::size_t n);
std::size_t threads();

/// Calls body(i) for i in [0, count). Exceptions are rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace vizsig
