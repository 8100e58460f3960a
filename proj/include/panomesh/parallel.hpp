#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace panomesh {

/// Deterministic block-partitioned parallel loop: worker t owns indices
/// [t*n/T, (t+1)*n/T), each index writes only its own output slot, so results
/// are identical for any thread count. The lowest-indexed worker exception is
/// rethrown on the calling thread.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const int lo = static_cast<int>(static_cast<long long>(t) * n / threads);
        const int hi = static_cast<int>(static_cast<long long>(t + 1) * n / threads);
        pool.emplace_back([lo, hi, t, &fn, &errors]() {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace panomesh
