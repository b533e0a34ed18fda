#include "brwfpt/rng.hpp"

#include "brwfpt/errors.hpp"

namespace brwfpt {

std::uint64_t RngState::binomial(std::uint64_t trials, double p) {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::uint64_t> dist(trials, p);
  return dist(engine_);
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_replica_seed(std::uint64_t master, std::uint64_t x_index,
                                  std::uint64_t replica, std::uint64_t restart) {
  if (x_index > kMaxXIndex || replica > kMaxReplica || restart > kMaxRestart) {
    throw ConfigError("replica seed index out of range (x_index < 2^16, replica < 2^32, "
                      "restart < 2^16)");
  }
  const std::uint64_t counter = (x_index << 48) | (restart << 32) | replica;
  return mix64(mix64(master) ^ counter);
}

}  // namespace brwfpt
