#pragma once

#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fedia {

// Parallelism cap for multi-run drivers: FEDIA_THREADS when set, hardware
// concurrency otherwise. Individual runs stay single-threaded and
// deterministic either way.
inline unsigned job_parallelism() {
    if (const char* env = std::getenv("FEDIA_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs independent jobs across at most job_parallelism() threads.
inline void run_jobs(std::vector<std::function<void()>> jobs) {
    const unsigned threads = std::min<unsigned>(job_parallelism(),
                                                static_cast<unsigned>(jobs.size()));
    if (threads <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::vector<std::thread> workers;
    std::size_t next = 0;
    std::mutex mu;
    for (unsigned i = 0; i < threads; ++i) {
        workers.emplace_back([&]() {
            for (;;) {
                std::size_t idx;
                {
                    std::lock_guard lock(mu);
                    if (next >= jobs.size()) return;
                    idx = next++;
                }
                jobs[idx]();
            }
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace fedia
