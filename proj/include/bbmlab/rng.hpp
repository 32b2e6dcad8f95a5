#pragma once

#include <cmath>
#include <cstdint>

namespace bbmlab {

// xoshiro256++ seeded via splitmix64 from (seed, stream). One independent
// stream per Monte Carlo replica, so results do not depend on scheduling.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream) {
    uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    for (auto& si : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      uint64_t v = z;
      v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
      v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
      si = v ^ (v >> 31);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in (0,1)
  double uniform() {
    return ((next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  // Box-Muller without the cached pair: fixed two draws per sample
  double normal() {
    double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace bbmlab
