#pragma once

#include <cstdint>
#include <random>

namespace pedsim {

// Seeded random source with platform-independent draws. The standard
// distributions are implementation-defined, so uniform and normal variates
// are derived here directly from the 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Seed for an independent stream derived from (seed, stream).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  std::size_t uniform_index(std::size_t n);
  double normal();                        // standard normal

 private:
  std::mt19937_64 engine_;
};

}  // namespace pedsim
