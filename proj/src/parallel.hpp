// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace voltail::detail {

/// Calls fn(chunk) for every chunk in [0, n_chunks) on up to `workers`
/// threads. Chunks are claimed dynamically; results must not depend on which
/// thread ran a chunk. The first exception thrown is rethrown here.
template <class Fn>
void parallel_chunks(std::uint64_t n_chunks, unsigned workers, Fn&& fn) {
    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, workers), n_chunks));
    if (n_threads <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks || stop.load()) return;
            try {
                fn(c);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads - 1);
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace voltail::detail
