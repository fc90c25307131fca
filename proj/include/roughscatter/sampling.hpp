// Seeded random streams and deterministic sharded Monte-Carlo execution.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace roughscatter {

/// One reproducible random stream.  Doubles are built from the raw 64-bit
/// engine output, so values do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Thread count from an explicit request, else ROUGHSCATTER_THREADS, else
/// the hardware concurrency.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ROUGHSCATTER_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Number of independent streams a run of n samples is split into.  Fixed
/// independently of the thread count so results do not depend on it.
inline int shard_count(std::uint64_t n) {
  return n < 64 ? static_cast<int>(std::max<std::uint64_t>(n, 1)) : 64;
}

/// Runs fn(shard, count, rng) for every shard and returns the per-shard
/// results in shard order.
template <class Result, class Fn>
std::vector<Result> run_shards(std::uint64_t n, std::uint64_t seed, int threads, Fn&& fn) {
  const int shards = shard_count(n);
  std::vector<Result> results(shards);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const int s = next.fetch_add(1);
      if (s >= shards) return;
      const std::uint64_t count = n / shards + (static_cast<std::uint64_t>(s) < n % shards ? 1 : 0);
      try {
        Rng rng(seed, static_cast<std::uint64_t>(s));
        results[s] = fn(s, count, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int t = std::max(1, std::min(resolve_threads(threads), shards));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace roughscatter
