#include "brwfpt/frontier.hpp"

#include <algorithm>
#include <cmath>

#include "brwfpt/errors.hpp"
#include "brwfpt/rate_function.hpp"

namespace brwfpt {

void FrontierConfig::validate() const {
  if (model.dim() != 1) throw ConfigError("frontier counts need a one-dimensional jump model");
  if (offspring.mode() != BranchingMode::Classical) {
    throw ConfigError("frontier counts need a classical offspring law");
  }
  if (steps < 4) throw ConfigError("frontier steps must be >= 4");
  if (offsets.empty()) throw ConfigError("frontier offsets must be non-empty");
  const double upper = std::sqrt(static_cast<double>(steps));
  for (double x : offsets) {
    if (!(x >= 2.0 && x <= upper)) {
      throw ConfigError("frontier offset " + std::to_string(x) + " outside [2, sqrt(n)] = [2, " +
                        std::to_string(upper) + "]");
    }
  }
  if (method == FrontierMethod::Lattice) {
    if (!(lattice_spacing > 0.0)) throw ConfigError("lattice spacing must be > 0");
    if (!(exact_limit >= 1.0)) throw ConfigError("lattice exact_limit must be >= 1");
    if (!model.first_marginal()) {
      throw ConfigError("lattice method needs a catalog marginal law");
    }
  }
  if (max_restarts < 0) throw ConfigError("max_restarts must be >= 0");
}

double frontier_centering(double c1, double c2, int n) {
  return c1 * n - 1.5 / c2 * std::log(static_cast<double>(n));
}

double frontier_log_slope(const std::vector<FrontierCount>& counts) {
  if (counts.size() < 2) throw InsufficientSamples("slope needs at least two offsets");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& c : counts) {
    if (!(c.count > 0.0)) throw DomainError("log slope needs positive counts");
    const double y = std::log(c.count / c.offset);
    sx += c.offset;
    sy += y;
    sxx += c.offset * c.offset;
    sxy += c.offset * y;
  }
  const double n = static_cast<double>(counts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Particle positions (exact) or site masses (lattice) at generation n, or
// nullopt if the population died out.
struct TerminalPopulation {
  std::vector<double> positions;  // exact
  std::vector<double> masses;     // lattice, site i at (origin + i) * h
  std::int64_t origin = 0;
  double spacing = 0.0;
};

std::optional<TerminalPopulation> run_exact(const FrontierConfig& cfg, RngState& rng) {
  PopulationState state = init_population(1);
  for (int n = 0; n < cfg.steps; ++n) {
    step_classical(state, cfg.offspring, cfg.model, rng);
    if (state.empty()) return std::nullopt;
    if (state.size() > cfg.population_cap) throw PopulationOverflow(cfg.population_cap);
  }
  TerminalPopulation out;
  out.positions.assign(state.positions().begin(), state.positions().end());
  return out;
}

struct LatticeKernel {
  int lowest = 0;  // offset of weights[0]
  std::vector<double> weights;
};

LatticeKernel make_kernel(const Marginal& law, double h) {
  const double reach = std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMarginal>) return 12.0 * std::sqrt(m.variance);
        else return m.half_width;
      },
      law);
  const int k_max = static_cast<int>(std::ceil(reach / h + 0.5));
  LatticeKernel kernel;
  kernel.lowest = -k_max;
  for (int k = -k_max; k <= k_max; ++k) {
    kernel.weights.push_back(marginal_cdf(law, (k + 0.5) * h) - marginal_cdf(law, (k - 0.5) * h));
  }
  return kernel;
}

std::optional<TerminalPopulation> run_lattice(const FrontierConfig& cfg, RngState& rng) {
  const LatticeKernel kernel = make_kernel(*cfg.model.first_marginal(), cfg.lattice_spacing);
  const std::size_t width = kernel.weights.size();
  const double p0 = cfg.offspring.p0();
  const double p1 = cfg.offspring.p1();
  const double mean = cfg.offspring.mean();

  std::vector<double> mass{1.0};
  std::int64_t origin = 0;
  std::vector<double> next;
  std::vector<std::uint64_t> children;
  for (int n = 0; n < cfg.steps; ++n) {
    next.assign(mass.size() + width - 1, 0.0);
    for (std::size_t i = 0; i < mass.size(); ++i) {
      const double m = mass[i];
      if (m <= 0.0) continue;
      double* target = next.data() + i;
      if (m >= cfg.exact_limit) {
        const double offspring_mass = m * mean;
        for (std::size_t j = 0; j < width; ++j) target[j] += offspring_mass * kernel.weights[j];
        continue;
      }
      // Sites fed only by expectation may hold fractional mass; round without bias.
      double whole = std::floor(m);
      if (rng.uniform() < m - whole) whole += 1.0;
      const auto k = static_cast<std::uint64_t>(whole);
      if (k == 0) continue;
      const std::uint64_t died = rng.binomial(k, p0);
      const std::uint64_t single = p0 < 1.0 ? rng.binomial(k - died, p1 / (1.0 - p0)) : 0;
      const std::uint64_t triple = k - died - single;
      std::uint64_t remaining = single + 3 * triple;
      double remaining_p = 1.0;
      for (std::size_t j = 0; j < width && remaining > 0; ++j) {
        const double w = kernel.weights[j];
        std::uint64_t here;
        if (j + 1 == width || w >= remaining_p) {
          here = remaining;
        } else {
          here = rng.binomial(remaining, w / remaining_p);
        }
        target[j] += static_cast<double>(here);
        remaining -= here;
        remaining_p -= w;
      }
    }
    origin += kernel.lowest;
    const auto first = std::find_if(next.begin(), next.end(), [](double v) { return v > 0.0; });
    if (first == next.end()) return std::nullopt;
    const auto last = std::find_if(next.rbegin(), next.rend(), [](double v) { return v > 0.0; });
    origin += first - next.begin();
    mass.assign(first, last.base());
  }
  TerminalPopulation out;
  out.masses = std::move(mass);
  out.origin = origin;
  out.spacing = cfg.lattice_spacing;
  return out;
}

}  // namespace

FrontierResult run_frontier_count(const FrontierConfig& config, std::uint64_t seed) {
  config.validate();
  double c1 = 0.0;
  double c2 = 0.0;
  if (config.c1 && config.c2) {
    c1 = *config.c1;
    c2 = *config.c2;
  } else {
    const RateFunction marginal(config.model, RateMode::Marginal);
    c1 = solve_c1(marginal, config.offspring.rho());
    c2 = marginal.along_first_axis(c1).maximizer[0];
  }

  FrontierResult result;
  result.m_n = frontier_centering(c1, c2, config.steps);
  std::uint64_t last_seed = 0;
  for (int restart = 0; restart <= config.max_restarts; ++restart) {
    last_seed = derive_replica_seed(seed, 0, 0, static_cast<std::uint64_t>(restart));
    RngState rng(last_seed);
    const auto terminal = config.method == FrontierMethod::Exact ? run_exact(config, rng)
                                                                 : run_lattice(config, rng);
    if (!terminal) continue;
    result.restarts = restart;
    for (double x : config.offsets) {
      const double threshold = result.m_n - x;
      double count = 0.0;
      if (config.method == FrontierMethod::Exact) {
        count = static_cast<double>(std::count_if(terminal->positions.begin(),
                                                  terminal->positions.end(),
                                                  [&](double p) { return p >= threshold; }));
      } else {
        for (std::size_t i = 0; i < terminal->masses.size(); ++i) {
          const double pos = static_cast<double>(terminal->origin + static_cast<std::int64_t>(i)) *
                             terminal->spacing;
          if (pos >= threshold) count += terminal->masses[i];
        }
      }
      result.counts.push_back({x, count});
    }
    if (config.method == FrontierMethod::Exact) {
      result.max_position = *std::max_element(terminal->positions.begin(), terminal->positions.end());
    } else {
      result.max_position = static_cast<double>(terminal->origin +
                                                static_cast<std::int64_t>(terminal->masses.size()) - 1) *
                            terminal->spacing;
    }
    return result;
  }
  throw SurvivalConditioningFailed(config.max_restarts + 1, last_seed);
}

}  // namespace brwfpt
