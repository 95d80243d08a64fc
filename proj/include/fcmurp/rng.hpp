#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fcmurp {

/// SplitMix64 finalizer; used to derive independent substream seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over a stream label, so that "gamma" and "lambda" streams never
/// share seeds for the same base seed.
[[nodiscard]] constexpr std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t a = 0,
                                                  std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed ^ label_hash(label));
  h = mix64(h ^ mix64(a + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ mix64(b + 0x85157af5ULL));
  return h;
}

/// Seeded 64-bit Mersenne Twister with portable variate generation. The
/// standard library's distributions are implementation-defined, so uniform,
/// normal and gamma variates are produced here to keep outputs bit-identical
/// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method (second variate cached).
  double normal();

  /// Gamma(shape, scale) via Marsaglia-Tsang; shape < 1 uses the boost
  /// U^(1/shape) transform.
  double gamma(double shape, double scale);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fcmurp
