#ifndef CIDS_PARALLEL_HPP
#define CIDS_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace cids {

/// Worker count from CIDS_THREADS, else hardware concurrency (at least 1).
int default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default_threads()).
/// Work items must write only to their own output slot; callers reduce in
/// index order afterwards, which keeps results independent of the worker count.
/// The first exception thrown by any item is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

} // namespace cids

#endif
