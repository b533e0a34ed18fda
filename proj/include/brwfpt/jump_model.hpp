#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "brwfpt/rng.hpp"

namespace brwfpt {

// One-dimensional marginal laws usable in a Product model.
struct UniformMarginal {
  double half_width = 1.0;  // Uniform[-a, a]
};
struct GaussianMarginal {
  double variance = 1.0;
};
struct TwoPointMarginal {
  double half_width = 1.0;  // +-a with probability 1/2 each
};
using Marginal = std::variant<UniformMarginal, GaussianMarginal, TwoPointMarginal>;

double marginal_log_mgf(const Marginal& m, double lambda);
double marginal_log_mgf_derivative(const Marginal& m, double lambda);
double marginal_variance(const Marginal& m);
// CDF of the marginal, used for lattice discretizations.
double marginal_cdf(const Marginal& m, double t);

// log(sinh(s)/s), accurate for tiny and huge |s|.
double log_sinhc(double s);
// d/ds log(sinh(s)/s) = coth(s) - 1/s.
double log_sinhc_derivative(double s);

enum class JumpKind { UniformSphere, Gaussian, Product, Elliptical };

// A centered d-dimensional increment law. Immutable after construction; copies
// share any nested base model.
//
// Supported laws all satisfy the strong non-lattice condition except Product
// models containing TwoPointMarginal entries, which are included for
// lattice/non-lattice contrast runs only.
class JumpModel {
 public:
  static JumpModel uniform_sphere(int dim);
  // Throws InvalidLaw unless covariance is symmetric positive definite.
  static JumpModel gaussian(const Eigen::MatrixXd& covariance);
  static JumpModel product(std::vector<Marginal> marginals);

  int dim() const noexcept { return dim_; }
  JumpKind kind() const noexcept;
  bool spherically_symmetric() const;
  std::string describe() const;

  // Fills out (size multiple of dim) with consecutive independent draws.
  void sample_into(RngState& rng, std::span<double> out) const;
  Eigen::VectorXd sample(RngState& rng) const;

  double log_mgf(const Eigen::VectorXd& lambda) const;
  Eigen::VectorXd log_mgf_grad(const Eigen::VectorXd& lambda) const;

  // Log-MGF of the first coordinate; equals log_mgf at (lambda1, 0, ..., 0).
  double marginal_log_mgf(double lambda1) const;
  double marginal_log_mgf_derivative(double lambda1) const;

  // Law of the first coordinate when it is one of the catalog marginals
  // (Uniform for the 3-sphere, Gaussian for Gaussian-based laws).
  std::optional<Marginal> first_marginal() const;

  // Covariance matrix of one jump.
  Eigen::MatrixXd covariance() const;

 private:
  struct Sphere {};
  struct Gaussian {
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd cholesky;  // lower factor L with L L^T = covariance
  };
  struct Product {
    std::vector<Marginal> marginals;
  };
  struct Elliptical {
    std::shared_ptr<const JumpModel> base;
    Eigen::MatrixXd transform;
  };

  JumpModel(int dim, std::variant<Sphere, Gaussian, Product, Elliptical> rep)
      : dim_(dim), rep_(std::move(rep)) {}

  double sphere_radial_log_mgf(double s) const;
  double sphere_radial_derivative(double s) const;

  friend JumpModel apply_linear_transform(const JumpModel& base, const Eigen::MatrixXd& transform);

  int dim_;
  std::variant<Sphere, Gaussian, Product, Elliptical> rep_;
};

// Law of T * zeta for zeta ~ base. Requires a spherically symmetric base
// (ConfigError otherwise); throws SingularTransform if |det T| < 1e-12 ||T||^d.
JumpModel apply_linear_transform(const JumpModel& base, const Eigen::MatrixXd& transform);

}  // namespace brwfpt
