#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace perfdom {

/// Runs fn(i) for i in [0, n) across up to `workers` threads. Each index
/// writes only its own output slot, so aggregation order is caller-defined
/// and results are identical for any worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned workers = 0) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> threads;
    unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    threads.reserve(count);
    for (unsigned t = 0; t < count; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
}

}  // namespace perfdom
