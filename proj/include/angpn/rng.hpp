#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace angpn {

/// Seedable generator built on std::mt19937_64, whose output sequence is fixed
/// by the standard. The real-valued transforms are written out here instead of
/// using <random> distributions, which differ between standard libraries.
///
/// Stream splitting: stream s of seed x is an mt19937_64 seeded with
/// splitmix64(x ^ splitmix64(s)). Streams in use are listed in `streams`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Uniform integer in [0, n) by rejection sampling.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

namespace streams {
inline constexpr std::uint64_t split = 0;
inline constexpr std::uint64_t data = 1;
/// Weight matrix `layer` draws from stream 16 + layer.
constexpr std::uint64_t weights(std::size_t layer) { return 16 + layer; }
}  // namespace streams

}  // namespace angpn
