#pragma once

#include <array>
#include <cstdint>

namespace fullece {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A 64-bit seed becomes the two 32-bit key words (low word first); the
/// 128-bit counter starts at zero and is incremented once per block of four
/// outputs. Output words are consumed in order 0..3.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed);

  /// The raw bijection: 10 rounds of Philox on (counter, key).
  static Block bijection(Block counter, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

 private:
  Key key_;
  Block counter_{};
  Block block_{};
  unsigned used_ = 4;
};

/// Draws derived from Philox4x32 that the generators need.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in the open interval (0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the Box-Muller transform (pairs are cached).
  double normal();

  /// log of a Gamma(shape, 1) draw. Marsaglia-Tsang for shape >= 1; for
  /// shape < 1 uses log G(shape + 1) + log(U) / shape, which stays finite
  /// when the draw itself underflows.
  double log_gamma(double shape);

 private:
  Philox4x32 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fullece
