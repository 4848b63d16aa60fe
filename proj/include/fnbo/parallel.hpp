#pragma once

// Index-parallel map over a fixed number of worker threads.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fnbo {

/// Worker count: FNBO_THREADS if set and positive, else hardware concurrency.
inline unsigned defaultThreadCount() {
    if (const char* env = std::getenv("FNBO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i, worker) for i in [0, n), worker in [0, threads). Work is
/// claimed dynamically, so callers must write results by index. The first
/// exception is rethrown after all workers stop.
inline void parallelForWorkers(std::size_t n,
                               const std::function<void(std::size_t, unsigned)>& body,
                               unsigned threads = 0) {
    if (threads == 0) threads = defaultThreadCount();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i, 0);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    auto worker = [&](unsigned w) {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i, w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline void parallelFor(std::size_t n, const std::function<void(std::size_t)>& body,
                        unsigned threads = 0) {
    parallelForWorkers(n, [&](std::size_t i, unsigned) { body(i); }, threads);
}

/// Sum of v[lo, hi) by a fixed binary tree, independent of scheduling.
template <class T, class Add>
T pairwiseReduce(const std::vector<T>& v, std::size_t lo, std::size_t hi, const Add& add, T zero) {
    if (hi <= lo) return zero;
    if (hi - lo == 1) return v[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return add(pairwiseReduce(v, lo, mid, add, zero), pairwiseReduce(v, mid, hi, add, zero));
}

inline double pairwiseSum(const std::vector<double>& v) {
    return pairwiseReduce(v, 0, v.size(), [](double a, double b) { return a + b; }, 0.0);
}

}  // namespace fnbo
