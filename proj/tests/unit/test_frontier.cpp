#include <doctest.h>

#include <cmath>

#include "brwfpt/errors.hpp"
#include "brwfpt/frontier.hpp"
#include "brwfpt/rate_function.hpp"

using namespace brwfpt;

namespace {

FrontierConfig uniform_config(int steps, std::vector<double> offsets, FrontierMethod method) {
  FrontierConfig c{JumpModel::product({UniformMarginal{1.0}}), OffspringLaw::classical(0, 0.9, 0.1)};
  c.steps = steps;
  c.offsets = std::move(offsets);
  c.method = method;
  return c;
}

}  // namespace

TEST_CASE("offsets outside [2, sqrt(n)] are rejected") {
  CHECK_THROWS_AS(run_frontier_count(uniform_config(100, {1.5, 3}, FrontierMethod::Exact), 1), ConfigError);
  CHECK_THROWS_AS(run_frontier_count(uniform_config(100, {2, 11}, FrontierMethod::Exact), 1), ConfigError);
  auto c = uniform_config(100, {2, 3}, FrontierMethod::Exact);
  c.model = JumpModel::uniform_sphere(2);
  CHECK_THROWS_AS(run_frontier_count(c, 1), ConfigError);
}

TEST_CASE("centering and slope helpers") {
  CHECK(frontier_centering(0.5, 1.5, 100) == doctest::Approx(50.0 - std::log(100.0)).epsilon(1e-14));
  std::vector<FrontierCount> counts;
  for (double x = 2; x <= 10; x += 1) counts.push_back({x, 3.0 * x * std::exp(1.25 * x)});
  CHECK(frontier_log_slope(counts) == doctest::Approx(1.25).epsilon(1e-12));
  counts[0].count = 0.0;
  CHECK_THROWS_AS(frontier_log_slope(counts), DomainError);
}

TEST_CASE("counts are nested within a run") {
  for (auto method : {FrontierMethod::Exact, FrontierMethod::Lattice}) {
    const auto c = uniform_config(64, {2, 3, 4, 5, 6, 7, 8}, method);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto r = run_frontier_count(c, seed);
      REQUIRE(r.counts.size() == 7);
      for (std::size_t k = 1; k < r.counts.size(); ++k) CHECK(r.counts[k].count >= r.counts[k - 1].count);
      CHECK(r.max_position <= 64.0);
    }
  }
}

TEST_CASE("lattice and exact simulations agree in mean") {
  const std::vector<double> offsets{2, 4, 6, 7};
  const auto exact = uniform_config(50, offsets, FrontierMethod::Exact);
  auto lattice = uniform_config(50, offsets, FrontierMethod::Lattice);
  lattice.exact_limit = 50;  // exercise the expectation branch too
  const int reps = 300;
  std::vector<double> se(offsets.size()), sl(offsets.size()), qe(offsets.size()), ql(offsets.size());
  for (int r = 0; r < reps; ++r) {
    const auto a = run_frontier_count(exact, 1000 + r);
    const auto b = run_frontier_count(lattice, 5000 + r);
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      se[k] += a.counts[k].count;
      qe[k] += a.counts[k].count * a.counts[k].count;
      sl[k] += b.counts[k].count;
      ql[k] += b.counts[k].count * b.counts[k].count;
    }
  }
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double me = se[k] / reps, ml = sl[k] / reps;
    const double ve = qe[k] / reps - me * me, vl = ql[k] / reps - ml * ml;
    const double z = (me - ml) / std::sqrt((ve + vl) / reps);
    CAPTURE(offsets[k]);
    CAPTURE(me);
    CAPTURE(ml);
    CHECK(std::abs(z) < 4.0);
  }
}

TEST_CASE("exact method respects the population cap") {
  auto c = uniform_config(100, {2, 3}, FrontierMethod::Exact);
  c.offspring = OffspringLaw::classical(0, 0.5, 0.5);
  c.population_cap = 10'000;
  CHECK_THROWS_AS(run_frontier_count(c, 1), PopulationOverflow);
}

TEST_CASE("survival conditioning restarts extinct runs") {
  auto c = uniform_config(16, {2, 3, 4}, FrontierMethod::Exact);
  c.offspring = OffspringLaw::classical(0.3, 0.2, 0.5);
  int restarted = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto r = run_frontier_count(c, seed);
    restarted += r.restarts > 0;
    CHECK(r.counts.back().count >= 1.0);
  }
  CHECK(restarted > 0);
  c.offspring = OffspringLaw::classical(1, 0, 0);
  c.max_restarts = 2;
  c.c1 = 0.3;
  c.c2 = 1.0;
  CHECK_THROWS_AS(run_frontier_count(c, 1), SurvivalConditioningFailed);
}
