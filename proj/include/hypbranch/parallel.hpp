#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hypbranch {

// Worker count: HYPBRANCH_WORKERS when set to a positive integer, otherwise
// the available hardware parallelism.
std::size_t worker_count();

namespace detail {
// Set on pool threads so nested parallel_for calls run inline.
inline thread_local bool in_parallel_region = false;
} // namespace detail

// Runs body(i) for every i in [0, n). Iterations must be independent; callers
// write results into per-index slots so output order never depends on
// scheduling. The first exception thrown by any iteration is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers = detail::in_parallel_region ? 1 : std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (workers * 16));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        const bool outer = detail::in_parallel_region;
        detail::in_parallel_region = true;
        struct Reset {
            bool value;
            ~Reset() { detail::in_parallel_region = value; }
        } reset{outer};
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace hypbranch
