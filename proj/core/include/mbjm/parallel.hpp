#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mbjm {

inline int default_thread_count() {
    if (const char* env = std::getenv("MBJM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? (int)hc : 4;
}

// Runs fn(i) for i in [0, n) on up to n_threads workers. Exceptions from
// workers are rethrown on the calling thread (first one wins).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int n_threads = 0) {
    if (n_threads <= 0) n_threads = default_thread_count();
    if (n_threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const int k = std::min<std::size_t>(n, (std::size_t)n_threads);
    for (int t = 0; t < k; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace mbjm
