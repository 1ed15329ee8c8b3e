// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_PARALLEL_HPP
#define RIS_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace ris
{
    // Worker count: the request if non-zero, else RIS_TOOLKIT_THREADS, else the hardware concurrency
    std::size_t thread_count(std::size_t requested = 0);

    // Calls fn(i) for i in [0, n) on up to "threads" workers. Each index is processed exactly once, so results
    // written to per-index slots do not depend on the schedule. The first exception is rethrown.
    void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &fn);
}

#endif
