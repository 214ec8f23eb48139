#pragma once

#include <cstddef>
#include <functional>

namespace rfmfs {

// Worker count used when a caller passes 0.
unsigned default_threads();

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default).
// Work is handed out in index order; the first exception is rethrown after
// all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace rfmfs
