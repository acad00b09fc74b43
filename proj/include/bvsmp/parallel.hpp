#pragma once

#include <cstddef>
#include <functional>

namespace bvsmp {

/// Number of worker threads to use when the caller passes 0.
int default_threads();

/// Calls body(begin, end) for consecutive blocks of `block` items covering
/// [0, n). Block boundaries depend only on n and block, never on `threads`,
/// so bodies that write disjoint outputs give identical results for any
/// thread count. The first exception thrown by a body is rethrown.
void parallel_for_blocks(std::size_t n, std::size_t block, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace bvsmp
