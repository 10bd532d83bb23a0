#pragma once

// Minimal deterministic work-sharing helper. Work items are indexed and
// results land in index order, so the outcome is independent of how many
// threads run or how chunks are scheduled.

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace aerocov {

/// Thread-count resolution: explicit request > AEROCOV_THREADS > hardware.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("AEROCOV_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. fn must be
/// reentrant; exceptions propagate from the first failing index.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    auto worker = [&](std::size_t slot) {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[slot] = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n_workers = std::min<std::size_t>(threads, count);
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace aerocov
