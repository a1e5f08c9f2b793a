#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace quatfrac::par {

inline int hardware_default() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

inline std::atomic<int>& max_threads_slot() {
    static std::atomic<int> n{hardware_default()};
    return n;
}

inline int max_threads() { return max_threads_slot().load(); }

inline void set_max_threads(int n) {
    if (n < 1) throw std::invalid_argument("set_max_threads: needs n >= 1");
    max_threads_slot().store(n);
}

// Evaluates fn(i) for i in [0, count) into a dense buffer.  Each slot is
// written exactly once from the same expression regardless of how many
// workers run, so the result is bit-identical for any thread count.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, const Fn& fn) {
    std::vector<T> out(count);
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), count == 0 ? 1 : count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mu;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// Fixed-shape pairwise tree sum over [lo, hi); the association pattern
// depends only on the element count, never on thread count, so reductions
// are reproducible.
template <class T>
T pairwise_sum_range(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n == 0) return T{};
    if (n == 1) return v[lo];
    const std::size_t mid = lo + n / 2;
    return pairwise_sum_range(v, lo, mid) + pairwise_sum_range(v, mid, hi);
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
    return pairwise_sum_range(v, 0, v.size());
}

}  // namespace quatfrac::par
