#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace extval {

// Runs fn(i) for i in [0, count). Work items write into preallocated slots
// indexed by i, so the result is identical for any thread count.
template <typename Fn>
void parallelFor(std::size_t count, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    pool.reserve(nw);
    for (std::size_t t = 0; t < nw; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace extval
