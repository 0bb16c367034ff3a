#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qmem {

struct ExecutionPolicy {
    unsigned workers = 0;  // 0 = hardware concurrency
    bool strict = false;   // single worker, single-pass reductions

    unsigned resolved_workers() const {
        if (strict) return 1;
        if (workers > 0) return workers;
        return std::max(1u, std::thread::hardware_concurrency());
    }

    static ExecutionPolicy serial() { return {1, true}; }
};

// Calls body(begin, end) over contiguous chunks of [0, n). Chunks never
// overlap, so bodies that only write to their own index range produce the
// same result for any worker count. The first exception thrown by a body is
// rethrown on the calling thread.
inline void parallel_for(std::size_t n, const ExecutionPolicy& policy,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(policy.resolved_workers(), n);
    if (workers <= 1) {
        body(0, n);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    threads.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace qmem
