#pragma once

#include <cstddef>
#include <functional>

namespace foj {

// Process-wide worker count for all parallel loops. 0 = hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(begin, end) over [0, n) split into contiguous chunks of at most
// chunk_size items. The chunk partition depends only on (n, chunk_size),
// never on the worker count, so any chunk-indexed output is reproducible.
// fn must write only to disjoint, chunk-owned locations.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t)>& fn);

// Convenience: one item per call.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t)>& fn);

}  // namespace foj
