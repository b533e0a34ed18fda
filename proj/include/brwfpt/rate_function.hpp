#pragma once

#include <Eigen/Dense>

#include "brwfpt/jump_model.hpp"

namespace brwfpt {

enum class RateMode {
  Marginal,  // one-dimensional rate function of the first coordinate
  Full,      // d-dimensional rate function
};

// Defaults are the values the acceptance suite pins; override per call site.
struct SolverOptions {
  double newton_tolerance = 1e-10;  // ||grad Lambda(lambda) - x|| <= tol * (1 + ||x||)
  int max_newton_iterations = 200;
  double root_tolerance = 1e-12;    // |I(c) - log rho|
  double bracket_start = 1e-4;
  double bracket_cap = 1e3;
};

struct LegendreResult {
  double value = 0.0;         // I(x)
  Eigen::VectorXd maximizer;  // lambda* = grad I(x)
  int iterations = 0;
};

// Fenchel-Legendre transform of a jump model's log-MGF:
//   I(x) = sup_lambda (lambda . x - Lambda(lambda)).
class RateFunction {
 public:
  RateFunction(JumpModel model, RateMode mode, SolverOptions options = {});

  const JumpModel& model() const noexcept { return model_; }
  RateMode mode() const noexcept { return mode_; }
  const SolverOptions& options() const noexcept { return options_; }
  // Dimension of the argument x: 1 in Marginal mode.
  int dim() const noexcept;

  double log_mgf(const Eigen::VectorXd& lambda) const;
  Eigen::VectorXd log_mgf_grad(const Eigen::VectorXd& lambda) const;

  // Damped Newton on the convex dual lambda -> Lambda(lambda) - lambda . x,
  // starting at 0. Throws NoConvergence when x lies outside the interior of
  // the range of grad Lambda.
  LegendreResult legendre_transform(const Eigen::VectorXd& x) const;

  // I((c, 0, ..., 0)), or I(c) in Marginal mode.
  LegendreResult along_first_axis(double c) const;

 private:
  Eigen::MatrixXd numeric_hessian(const Eigen::VectorXd& lambda) const;

  JumpModel model_;
  RateMode mode_;
  SolverOptions options_;
};

// grad I(x), i.e. the Legendre maximizer.
Eigen::VectorXd grad_I(const RateFunction& rf, const Eigen::VectorXd& x);

// Unique positive root of I(c) = log rho for a Marginal rate function.
// Throws RangeExceeded when no root exists below the bracket cap or the
// MGF domain boundary, DomainError when rho <= 1.
double solve_c1(const RateFunction& marginal, double rho);

struct SpeedConstants {
  double c1_hat = 0.0;         // I(c1_hat, 0) = log rho
  Eigen::VectorXd c2_vec;      // grad I(c1_hat, 0)
  double c1_marginal = 0.0;    // I_1(c1) = log rho
  double c2_marginal = 0.0;    // I_1'(c1)
};

SpeedConstants solve_c1_hat(const RateFunction& full, double rho);

// Unit vector along grad I(c1_hat, 0).
Eigen::VectorXd purge_normal(const RateFunction& full, double rho);

}  // namespace brwfpt
