#pragma once

#include <cstdint>
#include <random>

namespace brwfpt {

// Per-replica random state. Engine output is fixed by the standard
// (mt19937_64); distribution objects follow the host standard library.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  std::uint64_t binomial(std::uint64_t trials, double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Limits of the packed counter used by derive_replica_seed.
inline constexpr std::uint64_t kMaxXIndex = (1ULL << 16) - 1;
inline constexpr std::uint64_t kMaxReplica = (1ULL << 32) - 1;
inline constexpr std::uint64_t kMaxRestart = (1ULL << 16) - 1;

// seed = mix64(mix64(master) XOR (x_index << 48 | restart << 32 | replica)).
// For a fixed master this is injective over the index ranges above, since both
// the packing and mix64 are injective. Throws ConfigError outside the ranges.
std::uint64_t derive_replica_seed(std::uint64_t master, std::uint64_t x_index,
                                  std::uint64_t replica, std::uint64_t restart);

}  // namespace brwfpt
