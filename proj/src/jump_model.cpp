#include "brwfpt/jump_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "brwfpt/errors.hpp"
#include "brwfpt/quadrature.hpp"

namespace brwfpt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double log_cosh(double s) {
  const double a = std::abs(s);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// log of the normalizing constant of sin^{d-2} on [0, pi].
double log_sphere_angle_normalizer(int dim) {
  return 0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * (dim - 1)) - std::lgamma(0.5 * dim);
}

}  // namespace

double log_sinhc(double s) {
  const double a = std::abs(s);
  if (a < 1e-3) {
    const double a2 = a * a;
    return std::log1p(a2 / 6.0 + a2 * a2 / 120.0 + a2 * a2 * a2 / 5040.0 +
                      a2 * a2 * a2 * a2 / 362880.0);
  }
  if (a > 20.0) return a - std::log(2.0 * a) + std::log1p(-std::exp(-2.0 * a));
  return std::log(std::sinh(a) / a);
}

double log_sinhc_derivative(double s) {
  const double a = std::abs(s);
  double value;
  if (a < 1e-3) {
    const double a2 = a * a;
    value = a / 3.0 - a * a2 / 45.0 + 2.0 * a * a2 * a2 / 945.0;
  } else {
    value = 1.0 / std::tanh(a) - 1.0 / a;
  }
  return s < 0 ? -value : value;
}

double marginal_log_mgf(const Marginal& m, double lambda) {
  return std::visit(Overloaded{
                        [&](const UniformMarginal& u) { return log_sinhc(u.half_width * lambda); },
                        [&](const GaussianMarginal& g) { return 0.5 * g.variance * lambda * lambda; },
                        [&](const TwoPointMarginal& t) { return log_cosh(t.half_width * lambda); },
                    },
                    m);
}

double marginal_log_mgf_derivative(const Marginal& m, double lambda) {
  return std::visit(Overloaded{
                        [&](const UniformMarginal& u) {
                          return u.half_width * log_sinhc_derivative(u.half_width * lambda);
                        },
                        [&](const GaussianMarginal& g) { return g.variance * lambda; },
                        [&](const TwoPointMarginal& t) {
                          return t.half_width * std::tanh(t.half_width * lambda);
                        },
                    },
                    m);
}

double marginal_variance(const Marginal& m) {
  return std::visit(Overloaded{
                        [](const UniformMarginal& u) { return u.half_width * u.half_width / 3.0; },
                        [](const GaussianMarginal& g) { return g.variance; },
                        [](const TwoPointMarginal& t) { return t.half_width * t.half_width; },
                    },
                    m);
}

double marginal_cdf(const Marginal& m, double t) {
  return std::visit(Overloaded{
                        [&](const UniformMarginal& u) {
                          return std::clamp((t + u.half_width) / (2.0 * u.half_width), 0.0, 1.0);
                        },
                        [&](const GaussianMarginal& g) {
                          return 0.5 * std::erfc(-t / std::sqrt(2.0 * g.variance));
                        },
                        [&](const TwoPointMarginal& p) {
                          if (t < -p.half_width) return 0.0;
                          return t < p.half_width ? 0.5 : 1.0;
                        },
                    },
                    m);
}

JumpModel JumpModel::uniform_sphere(int dim) {
  if (dim < 1) throw InvalidLaw("sphere dimension must be >= 1");
  return JumpModel(dim, Sphere{});
}

JumpModel JumpModel::gaussian(const Eigen::MatrixXd& covariance) {
  const auto d = covariance.rows();
  if (d < 1 || covariance.cols() != d) throw InvalidLaw("covariance must be a square matrix");
  if (!covariance.allFinite()) throw InvalidLaw("covariance has non-finite entries");
  const double scale = covariance.cwiseAbs().maxCoeff();
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidLaw("covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw InvalidLaw("covariance is not positive definite");
  Eigen::MatrixXd lower = llt.matrixL();
  return JumpModel(static_cast<int>(d), Gaussian{covariance, lower});
}

JumpModel JumpModel::product(std::vector<Marginal> marginals) {
  if (marginals.empty()) throw InvalidLaw("product law needs at least one marginal");
  for (const auto& m : marginals) {
    const bool ok = std::visit(Overloaded{
                                   [](const UniformMarginal& u) { return u.half_width > 0; },
                                   [](const GaussianMarginal& g) { return g.variance > 0; },
                                   [](const TwoPointMarginal& t) { return t.half_width > 0; },
                               },
                               m);
    if (!ok) throw InvalidLaw("marginal scale parameters must be positive");
  }
  const int d = static_cast<int>(marginals.size());
  return JumpModel(d, Product{std::move(marginals)});
}

JumpKind JumpModel::kind() const noexcept {
  return std::visit(Overloaded{
                        [](const Sphere&) { return JumpKind::UniformSphere; },
                        [](const Gaussian&) { return JumpKind::Gaussian; },
                        [](const Product&) { return JumpKind::Product; },
                        [](const Elliptical&) { return JumpKind::Elliptical; },
                    },
                    rep_);
}

bool JumpModel::spherically_symmetric() const {
  if (dim_ == 1) return true;
  auto isotropic = [](const Eigen::MatrixXd& c) {
    const double s = c(0, 0);
    const Eigen::MatrixXd target = s * Eigen::MatrixXd::Identity(c.rows(), c.cols());
    return (c - target).cwiseAbs().maxCoeff() <= 1e-14 * std::abs(s);
  };
  return std::visit(
      Overloaded{
          [](const Sphere&) { return true; },
          [&](const Gaussian& g) { return isotropic(g.covariance); },
          [&](const Product& p) {
            const auto* first = std::get_if<GaussianMarginal>(&p.marginals.front());
            if (first == nullptr) return false;
            for (const auto& m : p.marginals) {
              const auto* g = std::get_if<GaussianMarginal>(&m);
              if (g == nullptr || g->variance != first->variance) return false;
            }
            return true;
          },
          [&](const Elliptical& e) {
            return isotropic(e.transform * e.transform.transpose());
          },
      },
      rep_);
}

std::string JumpModel::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Sphere&) { os << "uniform_sphere(d=" << dim_ << ")"; },
                 [&](const Gaussian&) { os << "gaussian(d=" << dim_ << ")"; },
                 [&](const Product&) { os << "product(d=" << dim_ << ")"; },
                 [&](const Elliptical& e) {
                   os << "elliptical(" << e.base->describe() << ")";
                 },
             },
             rep_);
  return os.str();
}

void JumpModel::sample_into(RngState& rng, std::span<double> out) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  const std::size_t count = out.size() / d;
  std::visit(
      Overloaded{
          [&](const Sphere&) {
            for (std::size_t k = 0; k < count; ++k) {
              double* v = out.data() + k * d;
              double norm2 = 0.0;
              do {
                norm2 = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                  v[i] = rng.normal();
                  norm2 += v[i] * v[i];
                }
              } while (norm2 == 0.0);
              const double inv = 1.0 / std::sqrt(norm2);
              for (std::size_t i = 0; i < d; ++i) v[i] *= inv;
            }
          },
          [&](const Gaussian& g) {
            double z[64];
            std::vector<double> heap;
            double* zp = z;
            if (d > 64) {
              heap.resize(d);
              zp = heap.data();
            }
            for (std::size_t k = 0; k < count; ++k) {
              double* v = out.data() + k * d;
              for (std::size_t i = 0; i < d; ++i) zp[i] = rng.normal();
              for (std::size_t i = 0; i < d; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j <= i; ++j) s += g.cholesky(i, j) * zp[j];
                v[i] = s;
              }
            }
          },
          [&](const Product& p) {
            for (std::size_t k = 0; k < count; ++k) {
              double* v = out.data() + k * d;
              for (std::size_t i = 0; i < d; ++i) {
                v[i] = std::visit(
                    Overloaded{
                        [&](const UniformMarginal& u) {
                          return u.half_width * (2.0 * rng.uniform() - 1.0);
                        },
                        [&](const GaussianMarginal& gm) {
                          return std::sqrt(gm.variance) * rng.normal();
                        },
                        [&](const TwoPointMarginal& t) {
                          return rng.uniform() < 0.5 ? -t.half_width : t.half_width;
                        },
                    },
                    p.marginals[i]);
              }
            }
          },
          [&](const Elliptical& e) {
            std::vector<double> base(out.size());
            e.base->sample_into(rng, base);
            for (std::size_t k = 0; k < count; ++k) {
              const double* b = base.data() + k * d;
              double* v = out.data() + k * d;
              for (std::size_t i = 0; i < d; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += e.transform(i, j) * b[j];
                v[i] = s;
              }
            }
          },
      },
      rep_);
}

Eigen::VectorXd JumpModel::sample(RngState& rng) const {
  Eigen::VectorXd v(dim_);
  sample_into(rng, std::span<double>(v.data(), static_cast<std::size_t>(dim_)));
  return v;
}

namespace {

// E exp(s U1) for U uniform on S^{d-1} is 0F1(; d/2; s^2/4). All terms are
// positive, so the sum keeps full relative accuracy near s = 0.
constexpr double kSphereSeriesLimit = 50.0;

struct SphereSeries {
  double tail = 0.0;        // M(s) - 1
  double derivative = 0.0;  // M'(s)
};

SphereSeries sphere_series(int dim, double s) {
  SphereSeries out;
  const double q = 0.25 * s * s;
  const double half_d = 0.5 * dim;
  double term = 1.0;
  for (int k = 1; k < 1000; ++k) {
    out.derivative += term * s / (2.0 * (half_d + k - 1.0));
    term *= q / (k * (half_d + k - 1.0));
    out.tail += term;
    if (term <= 1e-18 * out.tail && k > s) break;
  }
  return out;
}

}  // namespace

double JumpModel::sphere_radial_log_mgf(double s) const {
  s = std::abs(s);
  if (dim_ == 1) return log_cosh(s);
  if (dim_ == 3) return log_sinhc(s);
  if (s <= kSphereSeriesLimit) return std::log1p(sphere_series(dim_, s).tail);
  // First coordinate is cos(theta) with density proportional to sin^{d-2}(theta).
  const double power = dim_ - 2;
  const double integral = integrate_gauss_legendre(
      [&](double theta) {
        return std::exp(s * (std::cos(theta) - 1.0)) * std::pow(std::sin(theta), power);
      },
      0.0, std::numbers::pi);
  return s + std::log(integral) - log_sphere_angle_normalizer(dim_);
}

double JumpModel::sphere_radial_derivative(double s) const {
  const double a = std::abs(s);
  double value;
  if (dim_ == 1) {
    value = std::tanh(a);
  } else if (dim_ == 3) {
    value = log_sinhc_derivative(a);
  } else if (a <= kSphereSeriesLimit) {
    const auto series = sphere_series(dim_, a);
    value = series.derivative / (1.0 + series.tail);
  } else {
    const double power = dim_ - 2;
    auto weight = [&](double theta) {
      return std::exp(a * (std::cos(theta) - 1.0)) * std::pow(std::sin(theta), power);
    };
    const double numerator = integrate_gauss_legendre(
        [&](double theta) { return std::cos(theta) * weight(theta); }, 0.0, std::numbers::pi,
        {.initial_nodes = 200, .max_nodes = 12800, .relative_tolerance = 1e-12});
    const double denominator = integrate_gauss_legendre(weight, 0.0, std::numbers::pi);
    value = numerator / denominator;
  }
  return s < 0 ? -value : value;
}

double JumpModel::log_mgf(const Eigen::VectorXd& lambda) const {
  return std::visit(Overloaded{
                        [&](const Sphere&) { return sphere_radial_log_mgf(lambda.norm()); },
                        [&](const Gaussian& g) {
                          return 0.5 * lambda.dot(g.covariance * lambda);
                        },
                        [&](const Product& p) {
                          double sum = 0.0;
                          for (int i = 0; i < dim_; ++i) {
                            sum += brwfpt::marginal_log_mgf(p.marginals[i], lambda[i]);
                          }
                          return sum;
                        },
                        [&](const Elliptical& e) {
                          return e.base->log_mgf(e.transform.transpose() * lambda);
                        },
                    },
                    rep_);
}

Eigen::VectorXd JumpModel::log_mgf_grad(const Eigen::VectorXd& lambda) const {
  return std::visit(
      Overloaded{
          [&](const Sphere&) -> Eigen::VectorXd {
            const double s = lambda.norm();
            if (s == 0.0) return Eigen::VectorXd::Zero(dim_);
            return (sphere_radial_derivative(s) / s) * lambda;
          },
          [&](const Gaussian& g) -> Eigen::VectorXd { return g.covariance * lambda; },
          [&](const Product& p) -> Eigen::VectorXd {
            Eigen::VectorXd grad(dim_);
            for (int i = 0; i < dim_; ++i) {
              grad[i] = brwfpt::marginal_log_mgf_derivative(p.marginals[i], lambda[i]);
            }
            return grad;
          },
          [&](const Elliptical& e) -> Eigen::VectorXd {
            return e.transform * e.base->log_mgf_grad(e.transform.transpose() * lambda);
          },
      },
      rep_);
}

double JumpModel::marginal_log_mgf(double lambda1) const {
  if (const auto* p = std::get_if<Product>(&rep_)) {
    return brwfpt::marginal_log_mgf(p->marginals.front(), lambda1);
  }
  if (std::holds_alternative<Sphere>(rep_)) return sphere_radial_log_mgf(lambda1);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(dim_);
  lambda[0] = lambda1;
  return log_mgf(lambda);
}

double JumpModel::marginal_log_mgf_derivative(double lambda1) const {
  if (const auto* p = std::get_if<Product>(&rep_)) {
    return brwfpt::marginal_log_mgf_derivative(p->marginals.front(), lambda1);
  }
  if (std::holds_alternative<Sphere>(rep_)) return sphere_radial_derivative(lambda1);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(dim_);
  lambda[0] = lambda1;
  return log_mgf_grad(lambda)[0];
}

std::optional<Marginal> JumpModel::first_marginal() const {
  return std::visit(
      Overloaded{
          [&](const Sphere&) -> std::optional<Marginal> {
            if (dim_ == 1) return TwoPointMarginal{1.0};
            if (dim_ == 3) return UniformMarginal{1.0};
            return std::nullopt;
          },
          [&](const Gaussian& g) -> std::optional<Marginal> {
            return GaussianMarginal{g.covariance(0, 0)};
          },
          [&](const Product& p) -> std::optional<Marginal> { return p.marginals.front(); },
          [&](const Elliptical& e) -> std::optional<Marginal> {
            if (e.base->kind() == JumpKind::Gaussian ||
                (e.base->kind() == JumpKind::Product && e.base->spherically_symmetric())) {
              return GaussianMarginal{covariance()(0, 0)};
            }
            return std::nullopt;
          },
      },
      rep_);
}

Eigen::MatrixXd JumpModel::covariance() const {
  return std::visit(
      Overloaded{
          [&](const Sphere&) -> Eigen::MatrixXd {
            return Eigen::MatrixXd::Identity(dim_, dim_) / static_cast<double>(dim_);
          },
          [&](const Gaussian& g) -> Eigen::MatrixXd { return g.covariance; },
          [&](const Product& p) -> Eigen::MatrixXd {
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim_, dim_);
            for (int i = 0; i < dim_; ++i) c(i, i) = marginal_variance(p.marginals[i]);
            return c;
          },
          [&](const Elliptical& e) -> Eigen::MatrixXd {
            return e.transform * e.base->covariance() * e.transform.transpose();
          },
      },
      rep_);
}

JumpModel apply_linear_transform(const JumpModel& base, const Eigen::MatrixXd& transform) {
  const int d = base.dim();
  if (transform.rows() != d || transform.cols() != d) {
    throw ConfigError("transform must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!base.spherically_symmetric()) {
    throw ConfigError("elliptical base law must be spherically symmetric");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(transform);
  const double norm = svd.singularValues()[0];
  const double det = std::abs(transform.determinant());
  if (!(det >= 1e-12 * std::pow(norm, d)) || norm == 0.0) {
    throw SingularTransform("transform is singular (|det T| = " + std::to_string(det) + ")");
  }
  return JumpModel(d, JumpModel::Elliptical{std::make_shared<const JumpModel>(base), transform});
}

}  // namespace brwfpt
