#pragma once

// Reproducible, splittable random streams. Every stream is keyed by
// (seed, stream_id, substream); the generator state is derived by hashing
// the key, so streams can be created in any order and in parallel without
// changing their output. Gaussian draws use Box-Muller (never
// std::normal_distribution, whose output is implementation-defined).

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fracou {

struct NoiseSeed {
  std::uint64_t seed = 0;
  std::int64_t stream_id = 0;  // mode index offset
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// xoshiro256++ seeded through splitmix64 from a (seed, stream, substream) key.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::int64_t stream, std::int64_t substream = 0) {
    std::uint64_t h = seed;
    h ^= 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(substream) * 0xd1b54a32d192ed03ULL;
    std::uint64_t sm = h;
    for (auto& word : s_) word = detail::splitmix64(sm);
    // xoshiro must not start from the all-zero state
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // Uniform in (0,1].
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal, Box-Muller; draws are produced in pairs.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t s_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fracou
