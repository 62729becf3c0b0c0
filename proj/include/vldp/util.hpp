#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace vldp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent normal stream for path `index` of a run seeded with `seed`.
/// Streams depend only on (seed, index), so path sets do not depend on the
/// order or the thread in which paths are generated.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t index)
      : engine_(splitmix64(seed ^ splitmix64(index))) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Runs fn(begin, end, worker) over [0, n) split into contiguous chunks.
template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<long>(1, n))));
  if (threads == 1) {
    fn(0L, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const long b = w * chunk;
    const long e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e, w] { fn(b, e, w); });
  }
  for (auto& t : pool) t.join();
}

/// Shortest round-trip-safe text for CSV output (17 significant digits).
std::string format_real(double v);

}  // namespace vldp
