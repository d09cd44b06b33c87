#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace parareal {

// Runs batches of independent window tasks on a fixed-size worker pool.
// Tasks write into pre-assigned slots, so the results are bitwise identical
// for any worker count; only wall-clock changes. Exceptions are captured per
// task and the lowest-index one is rethrown after the batch, which keeps
// failure reporting deterministic too.
class WindowExecutor {
public:
    explicit WindowExecutor(int workers = 1) : workers_(workers < 1 ? 1 : workers) {}

    int workers() const { return workers_; }

    template <class Fn>
    void run_windows(std::size_t count, Fn&& fn) {
        if (count == 0) return;
        if (workers_ == 1 || count == 1) {
            for (std::size_t i = 0; i < count; ++i) fn(i);
            return;
        }
        std::vector<std::exception_ptr> errors(count);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::size_t nthreads = std::min<std::size_t>(workers_, count);
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

private:
    int workers_;
};

} // namespace parareal
