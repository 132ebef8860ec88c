#pragma once

#include <cstddef>
#include <functional>

namespace nlmc {

/// Runs body(begin, end) over a static contiguous partition of [0, n) into at most
/// `threads` chunks. The partition depends only on n and threads, and callers write
/// results by index, so output never depends on scheduling. The first exception (in
/// chunk order) is rethrown after all chunks finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nlmc
