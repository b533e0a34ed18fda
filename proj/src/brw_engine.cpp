#include "brwfpt/brw_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "brwfpt/errors.hpp"
#include "brwfpt/rate_function.hpp"

namespace brwfpt {

struct PopulationAccess {
  // Replaces the particle set with children of `parents`, each displaced by a
  // fresh jump. Children are created (and receive ids) in the order given.
  static void emit_children(PopulationState& s, const JumpModel& jump, RngState& rng) {
    const std::size_t d = static_cast<std::size_t>(s.dim_);
    const std::size_t m = s.scratch_parents_.size();
    s.scratch_positions_.resize(m * d);
    jump.sample_into(rng, s.scratch_positions_);
    for (std::size_t c = 0; c < m; ++c) {
      const double* parent = s.positions_.data() + static_cast<std::size_t>(s.scratch_parents_[c]) * d;
      double* child = s.scratch_positions_.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) child[j] += parent[j];
    }
    s.positions_.swap(s.scratch_positions_);
    s.pending_.swap(s.scratch_pending_);
    s.ids_.resize(m);
    for (std::size_t c = 0; c < m; ++c) s.ids_[c] = s.next_id_++;
    ++s.generation_;
    s.peak_size_ = std::max(s.peak_size_, m);
  }

  static void begin_step(PopulationState& s) {
    if (s.size() > std::numeric_limits<std::uint32_t>::max() / 3) {
      throw PopulationOverflow(std::numeric_limits<std::uint32_t>::max() / 3);
    }
    s.scratch_parents_.clear();
    s.scratch_pending_.clear();
    s.scratch_parents_.reserve(3 * s.size());
    s.scratch_pending_.reserve(3 * s.size());
  }

  static void add_child(PopulationState& s, std::size_t parent, bool pending) {
    s.scratch_parents_.push_back(static_cast<std::uint32_t>(parent));
    s.scratch_pending_.push_back(pending ? 1 : 0);
  }

  static void keep(PopulationState& s, std::span<const std::size_t> survivors) {
    const std::size_t d = static_cast<std::size_t>(s.dim_);
    std::vector<double> positions(survivors.size() * d);
    std::vector<std::uint64_t> ids(survivors.size());
    std::vector<std::uint8_t> pending(survivors.size());
    for (std::size_t k = 0; k < survivors.size(); ++k) {
      const std::size_t i = survivors[k];
      std::copy_n(s.positions_.data() + i * d, d, positions.data() + k * d);
      ids[k] = s.ids_[i];
      pending[k] = s.pending_[i];
    }
    s.positions_ = std::move(positions);
    s.ids_ = std::move(ids);
    s.pending_ = std::move(pending);
    ++s.purge_events_;
  }
};

PopulationState::PopulationState(int dim) : dim_(dim) {
  if (dim < 1) throw ConfigError("dimension must be >= 1");
}

std::size_t PopulationState::pending_count() const noexcept {
  return static_cast<std::size_t>(std::count(pending_.begin(), pending_.end(), std::uint8_t{1}));
}

std::uint64_t PopulationState::add_particle(std::span<const double> position, bool pending) {
  if (position.size() != static_cast<std::size_t>(dim_)) {
    throw ConfigError("particle position has the wrong dimension");
  }
  positions_.insert(positions_.end(), position.begin(), position.end());
  ids_.push_back(next_id_);
  pending_.push_back(pending ? 1 : 0);
  peak_size_ = std::max(peak_size_, ids_.size());
  return next_id_++;
}

PopulationState init_population(int dim) {
  PopulationState state(dim);
  const std::vector<double> origin(static_cast<std::size_t>(dim), 0.0);
  state.add_particle(origin);
  return state;
}

namespace {

// 0, 1 or 3 from one uniform draw. p3 == 0 never yields 3 even if
// p0 + p1 rounds below 1.
int classical_children(const OffspringLaw& law, double u) {
  if (u < law.p0()) return 0;
  if (u < law.p0() + law.p1() || law.p3() <= 0.0) return 1;
  return 3;
}

}  // namespace

void step_classical(PopulationState& state, const OffspringLaw& offspring, const JumpModel& jump,
                    RngState& rng) {
  if (offspring.mode() != BranchingMode::Classical) {
    throw ConfigError("step_classical requires a classical offspring law");
  }
  if (jump.dim() != state.dim()) throw ConfigError("jump model and population dimensions differ");
  PopulationAccess::begin_step(state);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const int k = classical_children(offspring, rng.uniform());
    for (int c = 0; c < k; ++c) PopulationAccess::add_child(state, i, false);
  }
  PopulationAccess::emit_children(state, jump, rng);
}

void step_delayed(PopulationState& state, const OffspringLaw& offspring, const JumpModel& jump,
                  RngState& rng) {
  if (offspring.mode() != BranchingMode::Delayed) {
    throw ConfigError("step_delayed requires a delayed offspring law");
  }
  if (jump.dim() != state.dim()) throw ConfigError("jump model and population dimensions differ");
  PopulationAccess::begin_step(state);
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.pending(i)) {
      for (int c = 0; c < 2; ++c) {
        if (rng.uniform() >= offspring.p0()) PopulationAccess::add_child(state, i, false);
      }
      continue;
    }
    switch (classical_children(offspring, rng.uniform())) {
      case 0: break;
      case 1: PopulationAccess::add_child(state, i, false); break;
      default:
        PopulationAccess::add_child(state, i, false);
        PopulationAccess::add_child(state, i, true);
        break;
    }
  }
  PopulationAccess::emit_children(state, jump, rng);
}

void step(PopulationState& state, const OffspringLaw& offspring, const JumpModel& jump,
          RngState& rng) {
  if (offspring.mode() == BranchingMode::Classical) {
    step_classical(state, offspring, jump, rng);
  } else {
    step_delayed(state, offspring, jump, rng);
  }
}

void purge(PopulationState& state, std::span<const double> normal, std::uint64_t q_c) {
  if (q_c == kNoPurge) return;
  if (q_c < 2 || q_c % 2 != 0) throw ConfigError("q_c must be an even integer >= 2");
  if (normal.size() != static_cast<std::size_t>(state.dim())) {
    throw ConfigError("purge normal has the wrong dimension");
  }
  const std::size_t n = state.size();
  if (n <= q_c) return;
  const std::size_t keep = static_cast<std::size_t>(q_c / 2);
  const std::size_t d = normal.size();
  const auto positions = state.positions();
  std::vector<double> projection(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += positions[i * d + j] * normal[j];
    projection[i] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    if (projection[a] != projection[b]) return projection[a] > projection[b];
    return state.id(a) < state.id(b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                   before);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  PopulationAccess::keep(state, order);
}

const char* to_string(FptStatus s) {
  switch (s) {
    case FptStatus::Hit: return "hit";
    case FptStatus::Extinct: return "extinct";
    case FptStatus::Timeout: return "timeout";
  }
  return "unknown";
}

void FptConfig::validate() const {
  if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("x must be finite and >= 0");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("radius must be > 0");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (q_c != kNoPurge && (q_c < 2 || q_c % 2 != 0)) {
    throw ConfigError("q_c must be an even integer >= 2");
  }
  if (population_cap < 1) throw ConfigError("population cap must be >= 1");
  if (normal) {
    if (normal->size() != model.dim()) throw ConfigError("purge normal has the wrong dimension");
    if (std::abs(normal->norm() - 1.0) > 1e-9) throw ConfigError("purge normal must be a unit vector");
  }
}

void FptConfig::resolve_normal() {
  if (normal || q_c == kNoPurge) return;
  normal = purge_normal(RateFunction(model, RateMode::Full), offspring.rho());
}

FptOutcome run_fpt(const FptConfig& config, std::uint64_t seed) {
  config.validate();
  const int d = config.model.dim();
  const double r2 = config.radius * config.radius;
  std::optional<Eigen::VectorXd> normal = config.normal;

  RngState rng(seed);
  PopulationState state = init_population(d);

  FptOutcome out;
  out.replica_seed = seed;
  auto finish = [&](FptStatus status, std::int64_t tau) {
    out.status = status;
    out.tau = tau;
    out.peak_size = state.peak_size();
    out.purge_events = state.purge_events();
    return out;
  };
  auto find_hit = [&]() -> std::optional<std::size_t> {
    const auto pos = state.positions();
    const std::size_t dd = static_cast<std::size_t>(d);
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (!config.count_pending_hits && state.pending(i)) continue;
      const double* p = pos.data() + i * dd;
      double dist2 = (p[0] - config.x) * (p[0] - config.x);
      for (std::size_t j = 1; j < dd && dist2 <= r2; ++j) dist2 += p[j] * p[j];
      if (dist2 <= r2) return i;
    }
    return std::nullopt;
  };
  auto record_hit = [&](std::size_t i) {
    const auto p = state.position(i);
    out.hit_position = Eigen::Map<const Eigen::VectorXd>(p.data(), d);
    return finish(FptStatus::Hit, state.generation());
  };

  if (auto hit = find_hit()) return record_hit(*hit);
  for (std::int64_t n = 1; n <= config.max_steps; ++n) {
    step(state, config.offspring, config.model, rng);
    if (state.empty()) return finish(FptStatus::Extinct, state.generation());
    if (state.size() > config.population_cap) throw PopulationOverflow(config.population_cap);
    if (auto hit = find_hit()) return record_hit(*hit);
    if (config.q_c != kNoPurge && state.size() > config.q_c) {
      if (!normal) {
        normal = purge_normal(RateFunction(config.model, RateMode::Full), config.offspring.rho());
      }
      purge(state, std::span<const double>(normal->data(), static_cast<std::size_t>(d)),
            config.q_c);
    }
  }
  return finish(FptStatus::Timeout, config.max_steps);
}

FptOutcome run_fpt_conditioned(const FptConfig& config, const ReplicaKey& key, int max_restarts) {
  if (max_restarts < 0) throw ConfigError("max_restarts must be >= 0");
  std::uint64_t seed = 0;
  for (int restart = 0; restart <= max_restarts; ++restart) {
    seed = derive_replica_seed(key.master_seed, key.x_index, key.replica,
                               static_cast<std::uint64_t>(restart));
    FptOutcome outcome = run_fpt(config, seed);
    if (outcome.status != FptStatus::Extinct) {
      outcome.restarts = restart;
      return outcome;
    }
  }
  throw SurvivalConditioningFailed(max_restarts + 1, seed);
}

DelayedCountPath simulate_delayed_counts(const OffspringLaw& offspring, int steps, RngState& rng,
                                         double exact_limit) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  const double p0 = offspring.p0();
  const double p1 = offspring.p1();
  const double p3 = offspring.p3();
  DelayedCountPath path;
  path.ordinary.reserve(static_cast<std::size_t>(steps) + 1);
  path.pending.reserve(static_cast<std::size_t>(steps) + 1);
  double ordinary = 1.0;
  double pending = 0.0;
  path.ordinary.push_back(ordinary);
  path.pending.push_back(pending);
  for (int n = 0; n < steps; ++n) {
    double next_ordinary = 0.0;
    double next_pending = 0.0;
    if (ordinary > exact_limit) {
      next_ordinary += (p1 + p3) * ordinary;
      next_pending += p3 * ordinary;
    } else {
      const auto k = static_cast<std::uint64_t>(std::llround(ordinary));
      const std::uint64_t died = rng.binomial(k, p0);
      const std::uint64_t rest = k - died;
      const std::uint64_t cont = p0 < 1.0 ? rng.binomial(rest, p1 / (1.0 - p0)) : 0;
      const std::uint64_t branched = rest - cont;
      next_ordinary += static_cast<double>(cont + branched);
      next_pending += static_cast<double>(branched);
    }
    if (pending > exact_limit) {
      next_ordinary += 2.0 * (1.0 - p0) * pending;
    } else {
      const auto k = static_cast<std::uint64_t>(std::llround(pending));
      next_ordinary += static_cast<double>(rng.binomial(2 * k, 1.0 - p0));
    }
    ordinary = next_ordinary;
    pending = next_pending;
    path.ordinary.push_back(ordinary);
    path.pending.push_back(pending);
    if (ordinary == 0.0 && pending == 0.0) {
      path.extinct = true;
      break;
    }
  }
  return path;
}

}  // namespace brwfpt
