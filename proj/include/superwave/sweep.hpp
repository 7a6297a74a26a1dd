#pragma once

// Order-preserving parallel sweep over independent grid points.

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace superwave {

template <class R>
struct SweepOutcome {
    std::optional<R> value;
    std::string error;  // empty on success
    double seconds = 0.0;

    bool ok() const { return value.has_value(); }
};

// Runs worker(points[i]) for every i on up to `jobs` threads. Result i always
// belongs to point i; an exception thrown by one point is recorded and the
// remaining points still run.
template <class P, class R>
std::vector<SweepOutcome<R>> sweep_grid(const std::vector<P>& points,
                                        const std::function<R(const P&)>& worker, int jobs) {
    std::vector<SweepOutcome<R>> out(points.size());
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            const auto start = std::chrono::steady_clock::now();
            try {
                out[i].value.emplace(worker(points[i]));
            } catch (const std::exception& e) {
                out[i].error = e.what();
                if (out[i].error.empty()) out[i].error = "unknown error";
            } catch (...) {
                out[i].error = "unknown error";
            }
            out[i].seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(points.size(), static_cast<std::size_t>(jobs < 1 ? 1 : jobs));
    if (threads <= 1) {
        run();
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace superwave
