#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace plma {

// Thread budget: hardware concurrency capped by the PLMA_THREADS environment
// variable. Always >= 1.
inline int thread_budget() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    hw = std::min(hw, 16);
    if (const char* env = std::getenv("PLMA_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

// Fork-join loop over [begin, end). The body must be safe to run concurrently
// for distinct indices (disjoint writes, or reductions that are combined by
// the caller in chunk order). Small ranges run serially.
inline void parallel_for(int begin, int end, const std::function<void(int)>& body,
                         int min_grain = 256) {
    const int n = end - begin;
    if (n <= 0) return;
    const int threads = std::min(thread_budget(), std::max(1, n / min_grain));
    if (threads <= 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = begin + t * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace plma
