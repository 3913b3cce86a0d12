#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace stopsec {

// Worker count for Monte-Carlo fan-out: STOPSEC_THREADS caps it when set.
inline unsigned thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("STOPSEC_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0 && v < 1024) return static_cast<unsigned>(v);
    }
    return hw;
}

// Runs fn(i) for i in [0, n) across the thread budget. Results must be
// written into caller-owned per-index slots so output order stays fixed
// regardless of scheduling.
inline void parallel_for_indexed(size_t n, const std::function<void(size_t)>& fn) {
    const unsigned workers = std::min<size_t>(thread_budget(), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace stopsec
