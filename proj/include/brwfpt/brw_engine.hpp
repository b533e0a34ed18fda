#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "brwfpt/jump_model.hpp"
#include "brwfpt/offspring.hpp"
#include "brwfpt/population.hpp"
#include "brwfpt/rng.hpp"

namespace brwfpt {

// Sentinel for "never purge".
inline constexpr std::uint64_t kNoPurge = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::size_t kDefaultPopulationCap = 5'000'000;

// One generation of the classical BRW: every particle is replaced by 0, 1 or 3
// children, each displaced from the parent by an independent jump.
void step_classical(PopulationState& state, const OffspringLaw& offspring, const JumpModel& jump,
                    RngState& rng);

// One generation of the delayed-branching BRW. An ordinary particle dies
// (p0), continues as one jumped ordinary child (p1), or performs a type-I
// event (p3) yielding one ordinary and one pending child, both jumped. A
// pending particle resolves into two jumped ordinary children, each surviving
// independently with probability 1 - p0. The expected ordinary count then obeys
//   N[n+1] = (p1 + p3) N[n] + 2 p3 (1 - p0) N[n-1].
// With p3 = 0 the random draws coincide with step_classical.
void step_delayed(PopulationState& state, const OffspringLaw& offspring, const JumpModel& jump,
                  RngState& rng);

// Dispatches on offspring.mode().
void step(PopulationState& state, const OffspringLaw& offspring, const JumpModel& jump,
          RngState& rng);

// If more than q_c particles are alive, keeps the q_c/2 with the largest
// <position, normal> (ties to the smaller id) and counts a purge event.
// Survivors keep their relative order. Requires q_c >= 2 and even.
void purge(PopulationState& state, std::span<const double> normal, std::uint64_t q_c);

struct FptConfig {
  JumpModel model;
  OffspringLaw offspring;
  double x = 0.0;
  double radius = 1.0;
  std::uint64_t q_c = 9000;  // kNoPurge disables purging
  std::int64_t max_steps = 1000;
  bool count_pending_hits = true;
  std::size_t population_cap = kDefaultPopulationCap;
  // Unit purge direction; computed from the rate function when empty.
  std::optional<Eigen::VectorXd> normal;

  // Throws ConfigError listing the first invalid parameter.
  void validate() const;
  // Fills `normal` from purge_normal(model, offspring.rho()) if unset and
  // purging is enabled.
  void resolve_normal();
};

enum class FptStatus { Hit, Extinct, Timeout };
const char* to_string(FptStatus s);

struct FptOutcome {
  FptStatus status = FptStatus::Timeout;
  // Hit: first passage time; Extinct: generation of extinction; Timeout: max_steps.
  std::int64_t tau = 0;
  Eigen::VectorXd hit_position;  // set for Hit only
  std::size_t peak_size = 0;
  std::int64_t purge_events = 0;
  std::uint64_t replica_seed = 0;
  int restarts = 0;

  bool operator==(const FptOutcome&) const = default;
};

// Evolves one replica until some particle lies in the closed ball of the given
// radius around (x, 0, ..., 0), the population dies out, or max_steps elapse.
// Generation 0 is checked too. Throws ConfigError, PopulationOverflow.
FptOutcome run_fpt(const FptConfig& config, std::uint64_t seed);

struct ReplicaKey {
  std::uint64_t master_seed = 0;
  std::uint64_t x_index = 0;
  std::uint64_t replica = 0;
};

// Survival conditioning by rejection: restart r uses
// derive_replica_seed(master, x_index, replica, r). Returns the first
// non-extinct outcome; throws SurvivalConditioningFailed after max_restarts + 1
// extinct runs.
FptOutcome run_fpt_conditioned(const FptConfig& config, const ReplicaKey& key, int max_restarts);

// Ordinary/pending counts of a delayed-branching population, simulated
// without positions. Counts above `exact_limit` evolve by their expectation.
struct DelayedCountPath {
  std::vector<double> ordinary;  // ordinary[n] = ordinary count at generation n
  std::vector<double> pending;
  bool extinct = false;
};

DelayedCountPath simulate_delayed_counts(const OffspringLaw& offspring, int steps, RngState& rng,
                                         double exact_limit = 1e15);

}  // namespace brwfpt
