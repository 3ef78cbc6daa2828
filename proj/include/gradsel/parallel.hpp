#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gradsel {

// Resolves the worker count: explicit request wins, then the GRADSEL_THREADS
// environment variable, then hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("GRADSEL_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, count) on up to n_threads workers.
//
// Each index writes into its own pre-allocated slot, so results never depend
// on scheduling; output built from the slots is identical for any thread
// count.  If several bodies throw, the exception from the smallest index is
// rethrown, again independent of scheduling.
inline void parallel_for(int count, int n_threads, const std::function<void(int)>& body) {
    n_threads = std::min(resolve_threads(n_threads), count);
    if (count <= 0) return;
    if (n_threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    int first_error_index = count;

    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gradsel
