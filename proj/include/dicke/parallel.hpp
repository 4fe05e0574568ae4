#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

// OpenBLAS runtime thread control; C linkage, lives outside any namespace.
extern "C" void openblas_set_num_threads(int num_threads);

namespace dicke::par {

/// Results must not depend on the worker count, so BLAS/LAPACK always run
/// single-threaded and parallelism lives at the job level.
inline void pin_blas_single_thread() {
    static const bool pinned = [] {
        openblas_set_num_threads(1);
        return true;
    }();
    (void)pinned;
}

inline int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(0..count-1) on up to `threads` workers. Callers own the output
/// slots, indexed by job id, so the schedule cannot change the result.
template <class Fn>
void parallel_index(std::size_t count, int threads, Fn&& fn) {
    pin_blas_single_thread();
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(threads));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace dicke::par
