#ifndef MATPOP_NUM_PARALLEL_HPP
#define MATPOP_NUM_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace matpop::num {

/// Static block partition of [0,n) over the given thread count. The body
/// receives its block and thread index and must write only to its own
/// indices; results are scheduling-independent.
inline void parallel_for_blocks(std::size_t n, int threads,
                                const std::function<void(std::size_t, std::size_t, int)>& body) {
    if (threads <= 1 || n < 2) {
        body(0, n, 0);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t lo = n * t / nt;
        const std::size_t hi = n * (t + 1) / nt;
        pool.emplace_back([lo, hi, t, &body] { body(lo, hi, (int)t); });
    }
    for (auto& th : pool) th.join();
}

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    parallel_for_blocks(n, threads, [&](std::size_t lo, std::size_t hi, int) {
        for (std::size_t i = lo; i < hi; ++i) body(i);
    });
}

}  // namespace matpop::num

#endif
