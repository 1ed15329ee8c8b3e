// SPDX-License-Identifier: Apache-2.0

#include "ris/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ris
{
    std::size_t thread_count(std::size_t requested)
    {
        if (requested > 0)
            return requested;
        if (const char *env = std::getenv("RIS_TOOLKIT_THREADS"))
        {
            try
            {
                long v = std::stol(env);
                if (v > 0)
                    return std::size_t(v);
            }
            catch (const std::exception &)
            {
            }
        }
        return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &fn)
    {
        threads = std::min(thread_count(threads), std::max<std::size_t>(n, 1));
        if (threads <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex mtx;
        auto worker = [&]
        {
            for (;;)
            {
                std::size_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (!error)
                        error = std::current_exception();
                    next = n;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
        if (error)
            std::rethrow_exception(error);
    }
}
