#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace pseudoaka {

/// Seedable randomness source injected into every actor that draws random
/// values. Output is a pure function of the seed and the call sequence, and
/// does not depend on the standard library's distribution implementations.
///
/// Not a CSPRNG: key material drawn from it is only fit for simulation.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform value in [0, bound). bound must be non-zero.
  std::uint64_t below(std::uint64_t bound)
  {
    // Reject the tail so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x = engine_();
    while (x >= limit) {
      x = engine_();
    }
    return x % bound;
  }

  /// Uniform value in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

  /// true with probability p.
  bool chance(double p)
  {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p;
  }

  void fill(std::span<std::uint8_t> out)
  {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t word = engine_();
      for (int b = 0; b < 8 && i < out.size(); b++, i++) {
        out[i] = static_cast<std::uint8_t>(word >> (56 - 8 * b));
      }
    }
  }

  /// Derives an independent child stream, e.g. one per actor.
  Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
  std::mt19937_64 engine_;
};

} // namespace pseudoaka
