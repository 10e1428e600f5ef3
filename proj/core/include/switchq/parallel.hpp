#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace switchq {

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};
    return cap;
}
}  // namespace detail

// Process-wide worker cap (0 = hardware concurrency). The CLI wires --threads
// into this. Numerical results never depend on the worker count: callers
// either write disjoint slots, or reduce per fixed-size chunk and fold the
// chunk results in chunk order, or fold exactly-commutative state (integer
// counters) per worker.
inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

inline unsigned max_threads() {
    unsigned cap = detail::thread_cap().load();
    if (cap != 0) return cap;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline std::size_t chunk_count(std::size_t n, std::size_t grain) {
    return n == 0 ? 0 : (n + grain - 1) / grain;
}

// Runs body(chunk_index, begin, end) over [0, n) split into chunks of size
// `grain`. Chunk boundaries depend only on (n, grain), never on workers.
// The first exception thrown by any chunk is rethrown on the caller thread.
template <typename Body>
void parallel_chunks(std::size_t n, std::size_t grain, Body body) {
    if (n == 0) return;
    if (grain == 0) grain = 1;
    const std::size_t chunks = chunk_count(n, grain);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(max_threads(), chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c, c * grain, std::min(n, (c + 1) * grain));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&]() {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                body(c, c * grain, std::min(n, (c + 1) * grain));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Parallel map over indices; writes must be disjoint per index.
template <typename Body>
void parallel_for(std::size_t n, Body body) {
    const std::size_t grain =
        std::max<std::size_t>(1, n / (static_cast<std::size_t>(max_threads()) * 8));
    parallel_chunks(n, grain, [&body](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

// Per-worker reduction: each worker owns one State, body fills it chunk by
// chunk, and all states are folded into `out` at the end. The fold order is
// unspecified, so this is only for exactly-commutative folds (integer
// counters and similar).
template <typename State, typename Body, typename Fold>
void worker_reduce(std::size_t n, std::size_t grain, State& out, Body body, Fold fold) {
    if (n == 0) return;
    if (grain == 0) grain = 1;
    const std::size_t chunks = chunk_count(n, grain);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(max_threads(), chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(out, c, c * grain, std::min(n, (c + 1) * grain));
        return;
    }
    std::vector<State> states(workers);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&](unsigned w) {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                body(states[w], c, c * grain, std::min(n, (c + 1) * grain));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    for (auto& s : states) fold(out, s);
}

}  // namespace switchq
