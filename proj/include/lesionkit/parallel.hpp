#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lesionkit {

// Splits [0, n) into contiguous chunks, one per worker. fn(begin, end) must
// write only to per-index slots. threads ≤ 1 runs inline. The first worker
// exception is rethrown after all workers join.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, &failure, &failure_mutex, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace lesionkit
