#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace iontrap
{

using Rng = std::mt19937_64;

/// Independent generator keyed by (master seed, i, j). Same key, same stream.
inline Rng make_substream(std::uint64_t master, std::uint64_t i, std::uint64_t j = 0)
{
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(master), hi(master), lo(i), hi(i), lo(j), hi(j), 0x9e3779b9u};
    return Rng(seq);
}

/// Runs fn(k) for k in [0, n) on up to `threads` workers (0 = all cores).
/// Work items must write only to their own output slot.
template<class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads == 1 || n < 2) {
        for (std::size_t k = 0; k < n; ++k)
            fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    {
        std::vector<std::jthread> pool;
        const auto workers = std::min<std::size_t>(threads, n);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                try {
                    for (std::size_t k = next++; k < n; k = next++)
                        fn(k);
                } catch (...) {
                    std::lock_guard lock(failure_lock);
                    if (!failure)
                        failure = std::current_exception();
                    next = n;
                }
            });
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace iontrap
