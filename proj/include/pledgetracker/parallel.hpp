#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace pledgetracker {

/// Applies `fn` to every item using at most `max_workers` threads. Results
/// keep the input order. The first exception thrown by `fn` is rethrown after
/// all workers have stopped.
template <typename T, typename F>
auto parallel_map(const std::vector<T>& items, std::size_t max_workers, F fn)
    -> std::vector<decltype(fn(items.front()))> {
    using R = decltype(fn(items.front()));
    std::vector<R> results(items.size());
    if (items.empty()) return results;
    std::size_t workers = std::clamp<std::size_t>(max_workers, 1, items.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(items.size());
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < items.size(); i = next++) {
                try {
                    results[i] = fn(items[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace pledgetracker
