#pragma once

#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

#include "jitvp/errors.hpp"

namespace jitvp {

// Applies a pure function to every item and returns results in input order.
// The output is identical for any worker count; on failure the exception of
// the lowest-indexed failing item is rethrown after in-flight work drains.
template <typename In, typename Fn>
auto map_ordered(const std::vector<In>& items, Fn fn, unsigned workers)
    -> std::vector<decltype(fn(items[0]))> {
    using Out = decltype(fn(items[0]));

    if (workers == 0) workers = 1;
    const std::size_t n = items.size();
    std::vector<std::optional<Out>> slots(n);
    std::vector<std::exception_ptr> failures(n);

    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(items[i]));
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) return;
                try {
                    slots[i].emplace(fn(items[i]));
                } catch (...) {
                    failures[i] = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < n; ++i)
        if (failures[i]) std::rethrow_exception(failures[i]);

    std::vector<Out> results;
    results.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) throw Error("map_ordered: missing result after failure drain");
        results.push_back(std::move(*slots[i]));
    }
    return results;
}

}  // namespace jitvp
