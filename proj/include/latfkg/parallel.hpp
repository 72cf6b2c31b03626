#pragma once

#include <cstddef>
#include <functional>

namespace latfkg {

// Worker count: LATFKG_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
int thread_limit();

// Runs task(i) for i in [0, count). Tasks must write only to their own slots;
// the first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace latfkg
