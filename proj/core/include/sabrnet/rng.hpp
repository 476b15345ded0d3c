#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>

// Deterministic random streams. Every simulation task derives its own
// generator from (master seed, surface id, row index) through a fixed
// mixing function, so output never depends on scheduling or worker count.

namespace sabrnet::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Public stream-derivation function: mix(master, a, b) is the seed of the
/// stream for task (a, b) under `master`.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0xff51afd7ed558ccdULL;
  h ^= splitmix64(s);
  s ^= b * 0xc4ceb9fe1a85ec53ULL;
  h ^= splitmix64(s);
  return h;
}

/// xoshiro256++ (Blackman & Vigna), seeded via splitmix64.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
  }

  std::uint64_t operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_;
};

namespace detail {

struct ZigguratTables {
  std::array<std::uint64_t, 128> kn;
  std::array<double, 128> wn;
  std::array<double, 128> fn;

  ZigguratTables() {
    // Marsaglia-Tsang ziggurat, 128 layers, scaled to a signed 63-bit lattice.
    const double m = 9223372036854775808.0;  // 2^63
    double dn = 3.442619855899;
    double tn = dn;
    const double vn = 9.91256303526217e-3;
    const double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint64_t>((dn / q) * m);
    kn[1] = 0;
    wn[0] = q / m;
    wn[127] = dn / m;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::uint64_t>((dn / tn) * m);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m;
    }
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Standard normal sampler (ziggurat over a xoshiro256++ stream).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

  double operator()() {
    const auto& z = detail::ziggurat();
    for (;;) {
      const auto hz = static_cast<std::int64_t>(gen_());
      const unsigned iz = static_cast<unsigned>(hz) & 127u;
      const std::uint64_t mag =
          hz >= 0 ? static_cast<std::uint64_t>(hz) : ~static_cast<std::uint64_t>(hz) + 1;
      if (mag < z.kn[iz]) return static_cast<double>(hz) * z.wn[iz];
      if (iz == 0) return tail(hz >= 0);
      const double x = static_cast<double>(hz) * z.wn[iz];
      if (z.fn[iz] + gen_.uniform() * (z.fn[iz - 1] - z.fn[iz]) < std::exp(-0.5 * x * x))
        return x;
      // fall through and redraw
    }
  }

  double uniform() { return gen_.uniform(); }
  Xoshiro256pp& engine() { return gen_; }

 private:
  double tail(bool positive) {
    const double r = 3.442619855899;
    double x, y;
    do {
      x = -std::log1p(-gen_.uniform()) / r;
      y = -std::log1p(-gen_.uniform());
    } while (y + y < x * x);
    return positive ? r + x : -r - x;
  }

  Xoshiro256pp gen_;
};

}  // namespace sabrnet::rng
