#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace superscar {

/// Run fn(i) for i in [0, n) on up to `workers` threads. Results come back in
/// index order whatever the scheduling, so output is independent of the
/// worker count. The first exception (lowest index) is rethrown after all
/// threads finish.
template <class Fn>
auto parallel_map(std::size_t n, int workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto count = static_cast<std::size_t>(std::max(1, workers));
    if (count == 1 || n <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < std::min(count, n); ++k) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// splitmix64 step; used to derive independent per-item seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Generator for item `index` of a run seeded with `seed`.
inline std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(mix_seed(seed ^ mix_seed(index + 1)));
}

/// Uniform double in [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

} // namespace superscar
