#ifndef MCD_RNG_HPP
#define MCD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace mcd {

// Splittable counter-seeded generator (xoshiro256** seeded through splitmix64).
// Identical (seed, stream) pairs reproduce identical draw sequences; child()
// derives statistically independent streams, which is how replications,
// bootstrap replicates and estimators get their own randomness.
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint64_t stream = 0) : seed_(seed), stream_(stream) {
    uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(x);
    // avoid the all-zero state
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  // new independent stream keyed off this one
  RngStream child(uint64_t key) const { return RngStream(seed_, mix(stream_, key)); }
  RngStream child(std::string_view name) const { return child(hash(name)); }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0,1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Box-Muller, one variate per call (no cached spare so that call sequences
  // stay reproducible regardless of interleaving)
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // index draw proportional to nonnegative weights (inverse cdf)
  int discrete(std::span<const double> w) {
    double total = 0.0;
    for (double v : w) total += v;
    double u = uniform01() * total;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  static uint64_t hash(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;  // fnv-1a
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(x);
  }

 private:
  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static uint64_t splitmix64(uint64_t&& x) {
    uint64_t y = x;
    return splitmix64(y);
  }
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t seed_, stream_;
  uint64_t s_[4];
};

}  // namespace mcd

#endif
