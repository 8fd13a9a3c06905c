#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace soliton::detail {

// Runs body(i) for i in [0, count) on up to `threads` workers. Items are
// handed out dynamically; each item is processed by exactly one thread, so
// results do not depend on the thread count as long as items write disjointly.
template <class Body>
void parallel_for(int count, int threads, Body&& body)
{
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min(threads, count);
    for (int t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace soliton::detail
