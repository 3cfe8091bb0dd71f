#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace glaeser {

/// requested > 0 is used as is; 0 means all cores; negative consults
/// GLAESER_THREADS and falls back to 1.
inline unsigned resolve_threads(int requested)
{
    if (requested < 0) {
        const char* env = std::getenv("GLAESER_THREADS");
        if (!env || !*env)
            return 1;
        try {
            requested = std::stoi(env);
        } catch (...) {
            return 1;
        }
        if (requested < 0)
            return 1;
    }
    if (requested == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        return hw ? hw : 1;
    }
    return static_cast<unsigned>(requested);
}

/// Runs f(i) for i in [0, n). Each index writes only its own slot, so the
/// result does not depend on the thread count. The exception from the
/// lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f)
{
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t err_index = n;
    std::exception_ptr err;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned t = std::min<std::size_t>(threads, n);
    for (unsigned k = 0; k < t; ++k)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

} // namespace glaeser
