#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lhsim {

/// Worker count from the LHSIM_JOBS environment variable, else hardware concurrency (at least 1).
unsigned default_jobs();

/**
 * Calls fn(i) for every i in [0, n) on up to `jobs` threads. Work items are
 * handed out by an atomic counter; callers write results into slot i so the
 * outcome never depends on scheduling. The first exception is rethrown
 * after all workers stop.
 */
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    const std::size_t count = std::min<std::size_t>(jobs, n);
    {
        std::vector<std::jthread> threads;
        threads.reserve(count);
        for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

} // namespace lhsim
