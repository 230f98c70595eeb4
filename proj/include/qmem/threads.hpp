#pragma once
// Minimal deterministic work partitioning.  Ranges are split into
// contiguous chunks, one per worker, so each worker writes a disjoint
// output slice and the result is independent of scheduling.  Numerical
// output must be bitwise identical for any worker count; the library
// guarantees this by never reducing across workers.

#include <cstddef>
#include <functional>

namespace qmem {

// Library-wide default worker count (clamped hardware concurrency).
unsigned default_workers();

// Run fn(begin, end) over a partition of [0, count) using `workers`
// threads (0 means default_workers()).  fn must only write to state
// owned by its index range.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace qmem
