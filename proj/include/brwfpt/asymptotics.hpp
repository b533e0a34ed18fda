#pragma once

#include "brwfpt/jump_model.hpp"
#include "brwfpt/offspring.hpp"
#include "brwfpt/rate_function.hpp"

namespace brwfpt {

enum class PredictionVariant {
  Symmetric,     // x/c1 + (d+2)/(2 c2 c1) log x
  NonSymmetric,  // c1_hat and d_{x1} I(c1_hat, 0) in place of c1, c2
  Delayed,       // delayed-branching constants from rho_tilde
};

const char* to_string(PredictionVariant v);

struct AsymptoticPrediction {
  double x = 0.0;
  double leading = 0.0;         // x / c1
  double log_correction = 0.0;  // coefficient * log x
  double total = 0.0;           // leading + log_correction
  PredictionVariant variant = PredictionVariant::Symmetric;
};

// All predictors reject x <= 1 with DomainError: they describe the large-x regime.
AsymptoticPrediction predict_A(double x, double c1, double c2, int dim);
AsymptoticPrediction predict_A_hat(double x, const SpeedConstants& constants, int dim);

// Positive root of t^2 - (p1 + p3) t - 2 p3 (1 - p0), the growth rate of the
// expected particle count under delayed branching. Throws InvalidLaw.
double delayed_rho(double p0, double p1, double p3);

struct DelayedConstants {
  double rho_tilde = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

// c1, c2 of the marginal rate function at log rho_tilde. Throws InvalidLaw when
// rho_tilde <= 1.
DelayedConstants delayed_constants(const JumpModel& model, const OffspringLaw& offspring,
                                   const SolverOptions& options = {});

AsymptoticPrediction predict_A_tilde(double x, const JumpModel& model,
                                     const OffspringLaw& offspring, int dim);
AsymptoticPrediction predict_A_tilde(double x, const DelayedConstants& constants, int dim);

}  // namespace brwfpt
