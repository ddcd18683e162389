#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

// Deterministic keyed random streams. Everything downstream of a seed is a
// pure function of that seed, independent of evaluation order across
// components and of the thread count, because each logical consumer derives
// its own stream from (root seed, purpose tag, indices...) instead of sharing
// a mutable generator. std::normal_distribution and friends are
// implementation-defined, so the variate transforms are written out here.

namespace lmb {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive combine: mix_key(mix_key(s,a),b) != mix_key(mix_key(s,b),a).
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t s = seed ^ (key + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  return splitmix64_next(s);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = root;
  for (std::uint64_t k : keys) s = mix_key(s, k);
  return s;
}

// Purpose tags keeping unrelated consumers on disjoint streams.
namespace stream_tag {
inline constexpr std::uint64_t scenario_truth = 0x5431;
inline constexpr std::uint64_t scenario_meas = 0x5432;
inline constexpr std::uint64_t filter_predict = 0x5433;
inline constexpr std::uint64_t filter_assoc = 0x5434;
inline constexpr std::uint64_t filter_resample = 0x5435;
inline constexpr std::uint64_t birth_chain = 0x5436;
inline constexpr std::uint64_t birth_weight = 0x5437;
inline constexpr std::uint64_t birth_resample = 0x5438;
inline constexpr std::uint64_t birth_predict = 0x5439;
}  // namespace stream_tag

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n). Modulo bias is < 2^-32 for the n used here; acceptable.
  std::uint32_t uniform_int(std::uint32_t n) {
    return static_cast<std::uint32_t>(next_u64() % n);
  }

  // Box-Muller; pairs are cached. uniform01() < 1 keeps log1p finite.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log1p(-u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Knuth multiplication method; fine for the modest means used here.
  int poisson(double mean) {
    double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RandomStream substream(std::uint64_t root, std::initializer_list<std::uint64_t> keys) {
  return RandomStream(derive_seed(root, keys));
}

}  // namespace lmb
