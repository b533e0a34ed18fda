#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "brwfpt/brw_engine.hpp"
#include "brwfpt/jump_model.hpp"
#include "brwfpt/offspring.hpp"

namespace brwfpt {

enum class FrontierMethod {
  // Individual particles, no purging; fails with PopulationOverflow beyond the cap.
  Exact,
  // Particle counts per lattice site of spacing h. A particle at site i jumps
  // to site i + k with probability P(xi in [(k - 1/2) h, (k + 1/2) h)), so the
  // lattice law matches the continuous one up to O(h^2) in variance. Sites
  // holding fewer than `exact_limit` particles are simulated exactly
  // (multinomial branching and jump allocation); larger sites evolve by their
  // expectation. Needed when the population is far beyond memory, e.g.
  // rho = 1.2 for 400 steps.
  Lattice,
};

struct FrontierConfig {
  JumpModel model;            // must be one-dimensional
  OffspringLaw offspring;     // classical
  int steps = 0;              // n
  std::vector<double> offsets;  // each in [2, sqrt(n)]
  FrontierMethod method = FrontierMethod::Exact;
  std::size_t population_cap = kDefaultPopulationCap;
  double lattice_spacing = 0.05;
  double exact_limit = 1e6;
  int max_restarts = 1000;
  // c1, c2 of the marginal rate function; solved when unset.
  std::optional<double> c1;
  std::optional<double> c2;

  void validate() const;
};

struct FrontierCount {
  double offset = 0.0;
  double count = 0.0;  // #{v : position >= m_n - offset}
};

struct FrontierResult {
  std::vector<FrontierCount> counts;
  double m_n = 0.0;           // c1 n - 3/(2 c2) log n
  double max_position = 0.0;  // rightmost particle at generation n
  int restarts = 0;           // extinct runs rejected before this one
};

// Runs a surviving one-dimensional BRW for n steps and counts particles within
// each offset of m_n. Throws ConfigError, PopulationOverflow,
// SurvivalConditioningFailed.
FrontierResult run_frontier_count(const FrontierConfig& config, std::uint64_t seed);

// m_n = c1 n - 3/(2 c2) log n.
double frontier_centering(double c1, double c2, int n);

// Least-squares slope of log(count / offset) against offset.
double frontier_log_slope(const std::vector<FrontierCount>& counts);

}  // namespace brwfpt
