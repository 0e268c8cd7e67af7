/// @file parallel.hpp
/// @brief Minimal fork-join helper honouring the S2LAB_THREADS environment cap.
///
/// Only pure element-wise maps go through parallel_for; every reduction in the
/// lab is sequential so results do not depend on the thread count.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace s2lab {

/// Effective worker count: min(hardware, S2LAB_THREADS if set and >= 1).
inline int thread_cap() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("S2LAB_THREADS")) {
        const long req = std::strtol(env, nullptr, 10);
        if (req >= 1 && req < hw) hw = static_cast<int>(req);
        if (req >= 1 && req >= hw) hw = static_cast<int>(std::min<long>(req, 256));
    }
    return hw;
}

/// Runs fn(begin, end) over disjoint chunks of [0, n).  fn must write only to
/// locations indexed by its own chunk (pure map); chunk boundaries are
/// deterministic for a given n and worker count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const int workers = std::min<std::int64_t>(thread_cap(), std::max<std::int64_t>(n, 1));
    if (workers <= 1 || n < (1 << 14)) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = n * w / workers;
        const std::int64_t hi = n * (w + 1) / workers;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace s2lab
