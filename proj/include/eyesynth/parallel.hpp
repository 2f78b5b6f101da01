// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace eyesynth {

/// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any call stops new work and is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (count <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto loop = [&] {
        while (!stop.load()) {
            const std::size_t i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace eyesynth
