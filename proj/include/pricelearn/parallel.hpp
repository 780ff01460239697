#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pricelearn {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks grab indices
// from a shared counter; callers write results into preallocated slots keyed
// by i, so the outcome is identical for any worker count. The first exception
// is rethrown on the calling thread.
template <typename Fn>
void parallel_for_ordered(std::int64_t n, int workers, Fn&& fn) {
    if (workers < 1) workers = 1;
    if (n <= 0) return;
    if (workers == 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int team = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> threads;
    threads.reserve(team);
    for (int w = 0; w < team; ++w) {
        threads.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace pricelearn
