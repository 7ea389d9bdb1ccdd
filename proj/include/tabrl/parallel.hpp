#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tabrl {

inline int worker_count() {
    if (const char* env = std::getenv("TABRL_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..n-1) across workers. Work items must be independent; callers
/// write results into per-index slots so the outcome is order-free.
inline void parallel_for(long long n, const std::function<void(long long)>& fn,
                         int workers = 0) {
    if (workers <= 0) workers = worker_count();
    if (workers == 1 || n <= 1) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long long> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    pool.reserve(static_cast<size_t>(std::min<long long>(workers, n)));
    for (int w = 0; w < workers && w < n; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const long long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace tabrl
