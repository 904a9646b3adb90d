#pragma once

#include <cstddef>
#include <functional>

namespace bavamio {

// Worker count: BAVAMIO_THREADS if set, otherwise hardware concurrency.
int thread_count();

// Runs fn(0..count-1) across threads with a static block partition. Tasks
// must write only to their own slots; results are then independent of
// scheduling, which keeps parallel runs bit-reproducible.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace bavamio
