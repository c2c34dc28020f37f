#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace arit {

// Parallelism cap: ARIT_THREADS env var, default = hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("ARIT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

// Independent map over [0, n). Each index is processed exactly once by one
// thread; fn must not share mutable state across indices. Results that need
// ordered reduction should be written to per-index slots and folded by the
// caller in index order, which keeps outputs bit-identical for any thread
// count.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace arit
