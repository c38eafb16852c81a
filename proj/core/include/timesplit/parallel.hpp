#pragma once

#include <cstddef>
#include <functional>

namespace timesplit {

// Runs fn(0..n-1) on up to `jobs` threads over static index blocks. Each task
// must write only to its own output slot; with that discipline results are
// identical for every job count, which the reporting layer depends on.
// jobs <= 1 runs inline. Exceptions are captured and rethrown (first one, by
// lowest block index).
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace timesplit
