#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace radiolith {

namespace detail {
inline int& thread_count_ref() {
    static int n = 1;
    return n;
}
}  // namespace detail

/// Worker count for row-parallel loops. Results are bit-identical for any
/// value because every output row is computed independently with a fixed
/// per-pixel accumulation order.
inline void set_thread_count(int n) { detail::thread_count_ref() = n < 1 ? 1 : n; }
inline int thread_count() { return detail::thread_count_ref(); }

/// Runs fn(y) for y in [0, rows) split into contiguous chunks.
inline void parallel_rows(int rows, const std::function<void(int)>& fn) {
    const int workers = std::min(thread_count(), rows);
    if (workers <= 1) {
        for (int y = 0; y < rows; ++y) fn(y);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int y0 = static_cast<int>(static_cast<long long>(rows) * w / workers);
        const int y1 = static_cast<int>(static_cast<long long>(rows) * (w + 1) / workers);
        pool.emplace_back([&fn, y0, y1] {
            for (int y = y0; y < y1; ++y) fn(y);
        });
    }
    for (auto& t : pool) t.join();
}

/// Stateless mixer: every draw is a pure function of (seed, counter), so
/// parallel schedules cannot change the stream. Algorithm id "splitmix64-v1"
/// is recorded in pipeline reports.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr const char* kRngAlgorithm = "splitmix64-v1";

/// Uniform double in [0,1) from a 64-bit word.
inline double u64_to_unit(std::uint64_t u) { return static_cast<double>(u >> 11) * 0x1.0p-53; }

/// Sequential seedable stream built on the same mixer.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }
    double next_unit() { return u64_to_unit(next()); }

  private:
    std::uint64_t state_;
};

}  // namespace radiolith
