#ifndef OUTID_RNG_HPP
#define OUTID_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace outid {

/// Small deterministic generator (splitmix64 core). Distributions are written
/// out here so a report depends only on the seed, not on the standard
/// library's implementation of <random>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream; used to give every scenario its own stream so
  /// results do not depend on evaluation order.
  Rng child(std::uint64_t salt) {
    std::uint64_t mixed = state_ ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    Rng r(mixed);
    r.next_u64();
    return r;
  }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; draws a fresh pair per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  /// k distinct values from {1, ..., n}, ascending.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i + 1;
    for (int i = 0; i < k; ++i) {
      const int j = i + uniform_int(n - i);
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    pool.resize(static_cast<size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::uint64_t state_;
};

}  // namespace outid

#endif  // OUTID_RNG_HPP
