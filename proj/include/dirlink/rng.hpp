#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dirlink {

/*
 * mt19937_64 with hand-written range reduction so that sampled sequences are
 * identical across standard libraries (std::uniform_*_distribution is not).
 *
 * Streams are forked by name: fork("split") and fork("init") of the same
 * parent are independent and stable regardless of how much either is used.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  [[nodiscard]] Rng fork(std::string_view name) const {
    // FNV-1a over the stream name, mixed with the parent seed.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return Rng(splitmix(seed_ ^ splitmix(h)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    // Rejection on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  /// k distinct elements of `pool`, uniformly without replacement, in draw order.
  template <typename T>
  std::vector<T> sample(std::span<const T> pool, std::size_t k) {
    std::vector<T> work(pool.begin(), pool.end());
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(work[i], work[i + index(work.size() - i)]);
    }
    work.resize(k);
    return work;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dirlink
