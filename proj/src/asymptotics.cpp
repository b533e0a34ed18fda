#include "brwfpt/asymptotics.hpp"

#include <cmath>

#include "brwfpt/errors.hpp"

namespace brwfpt {

const char* to_string(PredictionVariant v) {
  switch (v) {
    case PredictionVariant::Symmetric: return "symmetric";
    case PredictionVariant::NonSymmetric: return "non_symmetric";
    case PredictionVariant::Delayed: return "delayed";
  }
  return "unknown";
}

namespace {

AsymptoticPrediction make_prediction(double x, double c1, double c2, int dim,
                                     PredictionVariant variant) {
  if (!(x > 1.0)) throw DomainError("asymptotic prediction requires x > 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw DomainError("speed constants must be positive");
  if (dim < 1) throw DomainError("dimension must be >= 1");
  AsymptoticPrediction p;
  p.x = x;
  p.variant = variant;
  p.leading = x / c1;
  p.log_correction = (dim + 2.0) / (2.0 * c2 * c1) * std::log(x);
  p.total = p.leading + p.log_correction;
  return p;
}

}  // namespace

AsymptoticPrediction predict_A(double x, double c1, double c2, int dim) {
  return make_prediction(x, c1, c2, dim, PredictionVariant::Symmetric);
}

AsymptoticPrediction predict_A_hat(double x, const SpeedConstants& constants, int dim) {
  if (constants.c2_vec.size() < 1) throw DomainError("speed constants are not populated");
  return make_prediction(x, constants.c1_hat, constants.c2_vec[0], dim,
                         PredictionVariant::NonSymmetric);
}

double delayed_rho(double p0, double p1, double p3) {
  for (double p : {p0, p1, p3}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidLaw("offspring probabilities must lie in [0, 1]");
  }
  if (std::abs(p0 + p1 + p3 - 1.0) > 1e-12) {
    throw InvalidLaw("offspring probabilities must sum to 1");
  }
  // p1 + p3 = 1 - p0
  const double survive = 1.0 - p0;
  return 0.5 * survive + std::sqrt(0.25 * survive * survive + 2.0 * p3 * survive);
}

DelayedConstants delayed_constants(const JumpModel& model, const OffspringLaw& offspring,
                                   const SolverOptions& options) {
  DelayedConstants out;
  out.rho_tilde = delayed_rho(offspring.p0(), offspring.p1(), offspring.p3());
  if (!(out.rho_tilde > 1.0)) {
    throw InvalidLaw("delayed law is not supercritical (rho_tilde = " +
                     std::to_string(out.rho_tilde) + ")");
  }
  const RateFunction marginal(model, RateMode::Marginal, options);
  out.c1 = solve_c1(marginal, out.rho_tilde);
  out.c2 = marginal.along_first_axis(out.c1).maximizer[0];
  return out;
}

AsymptoticPrediction predict_A_tilde(double x, const DelayedConstants& constants, int dim) {
  return make_prediction(x, constants.c1, constants.c2, dim, PredictionVariant::Delayed);
}

AsymptoticPrediction predict_A_tilde(double x, const JumpModel& model,
                                     const OffspringLaw& offspring, int dim) {
  if (!(x > 1.0)) throw DomainError("asymptotic prediction requires x > 1");
  return predict_A_tilde(x, delayed_constants(model, offspring), dim);
}

}  // namespace brwfpt
