#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace gemmix {

// Points per work block. Block boundaries are fixed so per-block partial
// results, reduced in block order, are bit-identical for any thread count.
inline constexpr std::size_t kBlockSize = 8192;

inline std::size_t block_count(std::size_t n, std::size_t block = kBlockSize) {
    return (n + block - 1) / block;
}

void set_thread_count(unsigned n);
unsigned thread_count();

namespace detail {
// Set while the current thread executes a parallel_for task; nested loops then
// run inline instead of spawning another pool.
inline thread_local bool in_parallel_region = false;

struct RegionGuard {
    bool previous;
    RegionGuard() : previous(in_parallel_region) { in_parallel_region = true; }
    ~RegionGuard() { in_parallel_region = previous; }
};
}  // namespace detail

// Runs task(i) for i in [0, count). Tasks are handed out dynamically; callers
// write results into per-index slots and reduce in index order afterwards.
template <typename Task>
void parallel_for(std::size_t count, Task&& task) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), count));
    if (workers <= 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        detail::RegionGuard guard;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                task(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace gemmix
