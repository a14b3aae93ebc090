#pragma once

#include <cstdint>

namespace xcb {

// Deterministic random stream: xoshiro256++ seeded through splitmix64.
// The same seed yields the same sequence on every platform; nothing here
// depends on libstdc++ distribution internals.
//
// Experiments use one root seed and derive child streams per purpose and
// time step (see child()), so that one consumer drawing more or fewer
// variates cannot shift any other consumer's stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Uniform integer in [0, n), n >= 1. Unbiased (Lemire rejection).
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (no cached spare).
  double gaussian();

  // Independent stream keyed by (a, b) off this stream's seed.
  Rng child(std::uint64_t a, std::uint64_t b = 0) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace xcb
