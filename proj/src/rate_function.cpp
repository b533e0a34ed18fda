#include "brwfpt/rate_function.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "brwfpt/errors.hpp"

namespace brwfpt {

RateFunction::RateFunction(JumpModel model, RateMode mode, SolverOptions options)
    : model_(std::move(model)), mode_(mode), options_(options) {}

int RateFunction::dim() const noexcept { return mode_ == RateMode::Marginal ? 1 : model_.dim(); }

double RateFunction::log_mgf(const Eigen::VectorXd& lambda) const {
  if (mode_ == RateMode::Marginal) return model_.marginal_log_mgf(lambda[0]);
  return model_.log_mgf(lambda);
}

Eigen::VectorXd RateFunction::log_mgf_grad(const Eigen::VectorXd& lambda) const {
  if (mode_ == RateMode::Marginal) {
    Eigen::VectorXd g(1);
    g[0] = model_.marginal_log_mgf_derivative(lambda[0]);
    return g;
  }
  return model_.log_mgf_grad(lambda);
}

Eigen::MatrixXd RateFunction::numeric_hessian(const Eigen::VectorXd& lambda) const {
  const int n = dim();
  Eigen::MatrixXd h(n, n);
  for (int j = 0; j < n; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(lambda[j]));
    Eigen::VectorXd plus = lambda;
    Eigen::VectorXd minus = lambda;
    plus[j] += step;
    minus[j] -= step;
    h.col(j) = (log_mgf_grad(plus) - log_mgf_grad(minus)) / (plus[j] - minus[j]);
  }
  return 0.5 * (h + h.transpose());
}

LegendreResult RateFunction::legendre_transform(const Eigen::VectorXd& x) const {
  const int n = dim();
  if (x.size() != n) {
    throw DomainError("legendre_transform: argument has dimension " + std::to_string(x.size()) +
                      ", expected " + std::to_string(n));
  }
  if (!x.allFinite()) throw DomainError("legendre_transform: non-finite argument");

  const double tolerance = options_.newton_tolerance * (1.0 + x.norm());
  auto dual = [&](const Eigen::VectorXd& lambda) { return log_mgf(lambda) - lambda.dot(x); };

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  double objective = dual(lambda);
  Eigen::VectorXd residual = log_mgf_grad(lambda) - x;

  for (int iter = 0; iter < options_.max_newton_iterations; ++iter) {
    const double r = residual.norm();
    if (r <= tolerance) return {lambda.dot(x) - log_mgf(lambda), lambda, iter};

    Eigen::VectorXd direction;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(numeric_hessian(lambda));
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) direction = ldlt.solve(-residual);
    if (direction.size() != n || !direction.allFinite() || direction.dot(residual) >= 0.0) {
      direction = -residual;
    }

    // Backtracking halving; a step that leaves the dual flat up to rounding is
    // still taken when it shrinks the gradient residual.
    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd trial = lambda + t * direction;
      const double value = dual(trial);
      if (!std::isfinite(value)) continue;
      if (value < objective) {
        lambda = trial;
        objective = value;
        residual = log_mgf_grad(lambda) - x;
        accepted = true;
        break;
      }
      if (value <= objective + 1e-14 * (1.0 + std::abs(objective))) {
        Eigen::VectorXd trial_residual = log_mgf_grad(trial) - x;
        if (trial_residual.norm() < r) {
          lambda = trial;
          objective = value;
          residual = std::move(trial_residual);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) throw NoConvergence(iter + 1, r);
  }
  throw NoConvergence(options_.max_newton_iterations, residual.norm());
}

LegendreResult RateFunction::along_first_axis(double c) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim());
  x[0] = c;
  return legendre_transform(x);
}

Eigen::VectorXd grad_I(const RateFunction& rf, const Eigen::VectorXd& x) {
  return rf.legendre_transform(x).maximizer;
}

namespace {

struct AxisRoot {
  double c;
  LegendreResult at_root;
};

// Positive root of c -> I((c, 0, ...)) - log rho: bracket by doubling, then
// Newton steps (slope = first maximizer component) safeguarded by bisection.
AxisRoot solve_axis_root(const RateFunction& rf, double rho) {
  if (!(rho > 1.0) || !std::isfinite(rho)) {
    throw DomainError("growth rate rho must be finite and > 1, got " + std::to_string(rho));
  }
  const auto& opt = rf.options();
  const double target = std::log(rho);
  auto evaluate = [&](double c) -> std::optional<LegendreResult> {
    try {
      return rf.along_first_axis(c);
    } catch (const NoConvergence&) {
      return std::nullopt;  // beyond the range of grad Lambda
    }
  };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::quiet_NaN();
  for (double c = opt.bracket_start; c <= opt.bracket_cap; c *= 2.0) {
    const auto r = evaluate(c);
    if (!r || r->value > target) {
      hi = c;
      break;
    }
    lo = c;
  }
  if (std::isnan(hi)) {
    throw RangeExceeded("no root of I(c) = log rho below c = " + std::to_string(opt.bracket_cap));
  }

  double best_c = lo;
  double best_gap = target;
  std::optional<LegendreResult> best;
  double c = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    const auto r = evaluate(c);
    double next = 0.5 * (lo + hi);
    if (!r) {
      hi = c;
    } else {
      const double f = r->value - target;
      if (std::abs(f) < best_gap) {
        best_gap = std::abs(f);
        best_c = c;
        best = r;
      }
      if (std::abs(f) <= opt.root_tolerance) return {c, *r};
      (f < 0.0 ? lo : hi) = c;
      const double slope = r->maximizer[0];
      if (slope > 0.0) {
        const double newton = c - f / slope;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    c = next;
  }
  // Root located to machine precision; accept when I's rounding floor is the
  // only obstacle, otherwise the bracket closed on the domain boundary.
  if (best && best_gap <= 100.0 * opt.root_tolerance) return {best_c, *best};
  throw RangeExceeded("I(c) does not reach log rho inside the MGF domain (closest gap " +
                      std::to_string(best_gap) + ")");
}

}  // namespace

double solve_c1(const RateFunction& marginal, double rho) {
  if (marginal.mode() != RateMode::Marginal) {
    throw ConfigError("solve_c1 requires a marginal rate function");
  }
  return solve_axis_root(marginal, rho).c;
}

SpeedConstants solve_c1_hat(const RateFunction& full, double rho) {
  if (full.mode() != RateMode::Full) {
    throw ConfigError("solve_c1_hat requires a full rate function");
  }
  SpeedConstants out;
  const AxisRoot hat = solve_axis_root(full, rho);
  out.c1_hat = hat.c;
  out.c2_vec = hat.at_root.maximizer;
  const RateFunction marginal(full.model(), RateMode::Marginal, full.options());
  const AxisRoot one = solve_axis_root(marginal, rho);
  out.c1_marginal = one.c;
  out.c2_marginal = one.at_root.maximizer[0];
  return out;
}

Eigen::VectorXd purge_normal(const RateFunction& full, double rho) {
  if (full.mode() != RateMode::Full) {
    throw ConfigError("purge_normal requires a full rate function");
  }
  const Eigen::VectorXd c2 = solve_axis_root(full, rho).at_root.maximizer;
  return c2 / c2.norm();
}

}  // namespace brwfpt
