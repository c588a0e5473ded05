#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace skillgrid {

// splitmix64 step; used to derive independent stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic RNG wrapper. mt19937_64 output is fully specified by the
// standard, but the std distributions are not, so all sampling helpers here
// are hand-rolled to keep results identical across platforms and compilers.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
  std::uint64_t next_below(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double next_double();

  // Standard normal via Box-Muller (pair cached).
  double next_gaussian();

  // Exact engine state round-trip, for checkpoints.
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace skillgrid
