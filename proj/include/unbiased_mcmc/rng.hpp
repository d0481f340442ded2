#pragma once

// Reproducible, replicate-addressable random streams.
//
// A StreamFactory holds nothing but a root seed. Streams are derived by hashing
// (root_seed, replicate_id, role) into the state of a xoshiro256** generator,
// so workers never coordinate: any derivation path can be replayed in isolation.
// Variates are produced without internal buffering (one Box-Muller output per
// normal, no cached spare), so consuming n then 1 equals consuming n + 1.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

#include "unbiased_mcmc/error.hpp"

namespace umcmc {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t s = x;
  return splitmix64(s);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class RngStream {
 public:
  using result_type = std::uint64_t;

  /// Seeds the four state words from a 64-bit key via splitmix64.
  explicit RngStream(std::uint64_t key) noexcept {
    std::uint64_t sm = key;
    for (auto& w : s_) w = detail::splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next(); }

  result_type next() noexcept {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) {
    if (!(b > a)) throw ParameterError("uniform(a, b) requires a < b");
    return a + (b - a) * uniform();
  }

  /// Uniform on the open interval (0, 1); suitable for inverse CDFs.
  double uniform_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on (0, 1], safe for logarithms.
  double uniform_pos() noexcept { return 1.0 - uniform(); }

  /// Uniform index in [0, n). Uses Lemire's rejection method so the result is
  /// exactly uniform.
  std::size_t index(std::size_t n) {
    if (n == 0) throw ParameterError("index(n) requires n > 0");
    const std::uint64_t range = n;
    __uint128_t m = static_cast<__uint128_t>(next()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<__uint128_t>(next()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Standard normal by Box-Muller; uses the cosine branch only.
  double normal() noexcept {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  /// Gamma with density x^(shape-1) rate^shape exp(-rate x) / Gamma(shape).
  /// Marsaglia-Tsang squeeze/rejection; shape < 1 handled by the U^(1/shape)
  /// boost.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw ParameterError("gamma requires shape > 0 and rate > 0");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0, 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z;
      double v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * z * z * z * z) return d * v / rate;
      if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  double beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("beta requires a > 0 and b > 0");
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

 private:
  std::uint64_t s_[4];
};

/// Immutable, shareable source of derived streams.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t root_seed = 0) noexcept : root_seed_(root_seed) {}

  std::uint64_t root_seed() const noexcept { return root_seed_; }

  RngStream derive(std::uint64_t replicate_id, std::string_view role) const noexcept {
    return RngStream(key(replicate_id, role));
  }

  /// Factory whose root is itself derived; used to nest experiments (e.g. one
  /// factory per grid cell) without sharing any stream with the parent.
  StreamFactory child(std::uint64_t replicate_id, std::string_view role) const noexcept {
    return StreamFactory(key(replicate_id, role));
  }

 private:
  std::uint64_t key(std::uint64_t replicate_id, std::string_view role) const noexcept {
    std::uint64_t k = detail::mix64(root_seed_ ^ 0x6a09e667f3bcc909ULL);
    k = detail::mix64(k ^ replicate_id);
    k = detail::mix64(k ^ detail::fnv1a64(role));
    return k;
  }

  std::uint64_t root_seed_;
};

inline RngStream derive_stream(const StreamFactory& factory, std::uint64_t replicate_id,
                               std::string_view role) {
  return factory.derive(replicate_id, role);
}

}  // namespace umcmc
