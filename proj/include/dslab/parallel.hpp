#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dslab {

/// SplitMix64 finalizer over (seed, index): independent generator seeds for
/// parallel work items, stable regardless of scheduling.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline unsigned resolve_jobs(unsigned jobs) {
    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());
    return jobs;
}

/// Runs f(i) for i in [0, count) on up to `jobs` threads (0: all cores).
/// The first exception thrown by any item is rethrown after all threads join.
template <typename F>
void parallel_for(std::size_t count, unsigned jobs, F&& f) {
    jobs = static_cast<unsigned>(std::min<std::size_t>(resolve_jobs(jobs), count));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            while (!stop) {
                auto i = next++;
                if (i >= count)
                    return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    stop = true;
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace dslab
