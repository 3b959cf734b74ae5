#pragma once

#include <cstddef>
#include <functional>

namespace finslerlab {

// Worker count: hardware concurrency, capped by FINSLERLAB_THREADS when set.
int worker_count();

// Runs f(i) for i in [0, n) over worker_count() threads. The first exception
// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace finslerlab
