#include <doctest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "brwfpt/errors.hpp"
#include "brwfpt/jump_model.hpp"

using namespace brwfpt;

namespace {

Eigen::VectorXd e1(int d, double s) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v[0] = s;
  return v;
}

Eigen::MatrixXd sample_covariance(const JumpModel& m, int n, std::uint64_t seed, Eigen::VectorXd& mean) {
  RngState rng(seed);
  const int d = m.dim();
  std::vector<double> buf(static_cast<std::size_t>(n) * d);
  m.sample_into(rng, buf);
  Eigen::Map<Eigen::MatrixXd> x(buf.data(), d, n);
  mean = x.rowwise().mean();
  Eigen::MatrixXd centered = x.colwise() - mean;
  return centered * centered.transpose() / (n - 1);
}

std::vector<JumpModel> catalog() {
  Eigen::Matrix3d sigma;
  sigma << 1.0, 0.5, 0.25, 0.5, 1.5, 0.5, 0.25, 0.5, 0.5;
  Eigen::Matrix2d t;
  t << 2.0, 0.3, -0.4, 1.0;
  return {JumpModel::uniform_sphere(1),
          JumpModel::uniform_sphere(2),
          JumpModel::uniform_sphere(3),
          JumpModel::uniform_sphere(5),
          JumpModel::gaussian(sigma),
          JumpModel::product({UniformMarginal{1.0}, GaussianMarginal{2.0}, TwoPointMarginal{0.5}}),
          apply_linear_transform(JumpModel::uniform_sphere(2), t),
          apply_linear_transform(JumpModel::gaussian(Eigen::Matrix3d::Identity()), sigma.llt().matrixL())};
}

}  // namespace

TEST_CASE("sphere draws have unit norm") {
  RngState rng(1);
  const auto m = JumpModel::uniform_sphere(3);
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(m.sample(rng).norm() - 1.0) < 1e-12);
}

TEST_CASE("gaussian identity draws have unit variance") {
  Eigen::VectorXd mean;
  const auto cov = sample_covariance(JumpModel::gaussian(Eigen::Matrix3d::Identity()), 1'000'000, 2, mean);
  for (int i = 0; i < 3; ++i) {
    CHECK(cov(i, i) >= 0.99);
    CHECK(cov(i, i) <= 1.01);
  }
}

TEST_CASE("elliptical diag(2,1,1) stretches the first coordinate") {
  const auto base = JumpModel::gaussian(Eigen::Matrix3d::Identity());
  const Eigen::Matrix3d t = Eigen::Vector3d(2, 1, 1).asDiagonal();
  Eigen::VectorXd mean;
  const auto cov = sample_covariance(apply_linear_transform(base, t), 1'000'000, 3, mean);
  CHECK(cov(0, 0) >= 3.96);
  CHECK(cov(0, 0) <= 4.04);
}

TEST_CASE("every catalog law is centered and matches its covariance") {
  std::uint64_t seed = 10;
  for (const auto& m : catalog()) {
    CAPTURE(m.describe());
    Eigen::VectorXd mean;
    const auto cov = sample_covariance(m, 1'000'000, seed++, mean);
    const Eigen::MatrixXd expected = m.covariance();
    for (int i = 0; i < m.dim(); ++i) {
      const double sd = std::sqrt(expected(i, i));
      CHECK(std::abs(mean[i]) <= 5.0 * sd / 1e3);
      for (int j = 0; j < m.dim(); ++j) {
        CHECK(std::abs(cov(i, j) - expected(i, j)) <= 0.02 * std::sqrt(expected(i, i) * expected(j, j)));
      }
    }
  }
}

TEST_CASE("log_mgf spot values") {
  CHECK(JumpModel::gaussian(Eigen::Matrix3d::Identity()).log_mgf(e1(3, 1.0)) == doctest::Approx(0.5).epsilon(1e-15));
  const auto s3 = JumpModel::uniform_sphere(3);
  CHECK(s3.log_mgf(Eigen::VectorXd::Zero(3)) == 0.0);
  // Quadrature oracle: 2000-node midpoint rule of the uniform marginal density.
  double acc = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double t = -1.0 + (i + 0.5) * (2.0 / 2000);
    acc += std::exp(2.0 * t) * (2.0 / 2000) * 0.5;
  }
  CHECK(s3.log_mgf(e1(3, 2.0)) == doctest::Approx(std::log(acc)).epsilon(1e-6));
  CHECK(s3.log_mgf(e1(3, 2.0)) == doctest::Approx(std::log(std::sinh(2.0) / 2.0)).epsilon(1e-14));
}

TEST_CASE("sphere log_mgf matches the Bessel form in several dimensions") {
  for (int d : {1, 2, 3, 4, 5, 7}) {
    const auto m = JumpModel::uniform_sphere(d);
    for (double s : {1e-3, 0.01, 0.5, 1.0, 3.0, 10.0, 40.0, 60.0, 120.0}) {
      CAPTURE(d);
      CAPTURE(s);
      CHECK(m.log_mgf(e1(d, s)) == doctest::Approx(oracle::sphere_log_mgf(d, s)).epsilon(s < 0.1 ? 1e-8 : 1e-12));
      CHECK(m.marginal_log_mgf(s) == doctest::Approx(oracle::sphere_log_mgf(d, s)).epsilon(s < 0.1 ? 1e-8 : 1e-12));
    }
  }
}

TEST_CASE("log_mgf_grad spot values") {
  Eigen::Matrix3d sigma;
  sigma << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const auto g = JumpModel::gaussian(sigma);
  const Eigen::Vector3d l(0.3, -1.2, 0.7);
  CHECK((g.log_mgf_grad(l) - sigma * l).norm() < 1e-14);
  for (const auto& m : catalog()) CHECK(m.log_mgf_grad(Eigen::VectorXd::Zero(m.dim())).norm() < 1e-14);
  const auto grad = JumpModel::uniform_sphere(3).log_mgf_grad(e1(3, 1.0));
  CHECK(grad[0] == doctest::Approx(1.0 / std::tanh(1.0) - 1.0).epsilon(1e-12));
  CHECK(grad[0] == doctest::Approx(0.313035).epsilon(1e-6));
  CHECK(std::abs(grad[1]) < 1e-15);
}

TEST_CASE("marginal log_mgf") {
  CHECK(JumpModel::gaussian(Eigen::Matrix3d::Identity()).marginal_log_mgf(2.0) == doctest::Approx(2.0));
  CHECK(JumpModel::uniform_sphere(3).marginal_log_mgf(1.0) == doctest::Approx(0.161439).epsilon(1e-6));
  for (const auto& m : catalog()) {
    CHECK(m.marginal_log_mgf(0.0) == 0.0);
    for (double l : {-1.5, 0.3, 2.0}) {
      CHECK(m.marginal_log_mgf(l) == doctest::Approx(m.log_mgf(e1(m.dim(), l))).epsilon(1e-12));
    }
  }
}

TEST_CASE("linear transforms") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto base = JumpModel::gaussian(Eigen::Matrix3d::Identity());
  const auto same = apply_linear_transform(base, Eigen::Matrix3d::Identity());
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d l(n(gen), n(gen), n(gen));
    worst = std::max(worst, std::abs(same.log_mgf(l) - base.log_mgf(l)));
  }
  CHECK(worst < 1e-12);

  const Eigen::MatrixXd sigma = oracle::random_spd(gen, 3);
  const Eigen::MatrixXd t = sigma.llt().matrixL();
  const auto ell = apply_linear_transform(base, t);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d l(n(gen), n(gen), n(gen));
    CHECK(ell.log_mgf(l) == doctest::Approx(0.5 * l.dot(sigma * l)).epsilon(1e-12));
  }

  Eigen::Matrix3d singular = Eigen::Matrix3d::Identity();
  singular.row(1).setZero();
  CHECK_THROWS_AS(apply_linear_transform(base, singular), SingularTransform);
  CHECK_THROWS_AS(apply_linear_transform(JumpModel::product({UniformMarginal{}, UniformMarginal{}}),
                                         Eigen::Matrix2d::Identity()),
                  ConfigError);
}

TEST_CASE("invalid gaussian covariances are rejected") {
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(JumpModel::gaussian(asym), InvalidLaw);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(JumpModel::gaussian(indefinite), InvalidLaw);
}

TEST_CASE("property: log_mgf is convex") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const auto& m : catalog()) {
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd a(m.dim()), b(m.dim());
      for (int i = 0; i < m.dim(); ++i) {
        a[i] = u(gen);
        b[i] = u(gen);
      }
      for (double t : {0.25, 0.5, 0.75}) {
        CHECK(m.log_mgf(t * a + (1 - t) * b) <= t * m.log_mgf(a) + (1 - t) * m.log_mgf(b) + 1e-10);
      }
    }
  }
}

TEST_CASE("property: sphere log_mgf is rotation invariant") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int d : {2, 3, 4, 6}) {
    const auto m = JumpModel::uniform_sphere(d);
    Eigen::VectorXd l = Eigen::VectorXd::Zero(d);
    l[0] = 2.5;
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < 20; ++k) {
      Eigen::MatrixXd a(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = n(gen);
      const Eigen::MatrixXd q = a.householderQr().householderQ();
      const double v = m.log_mgf(q * l);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo < 1e-10);
  }
}

TEST_CASE("property: gradient matches central differences") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& m : catalog()) {
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd l(m.dim());
      for (int i = 0; i < m.dim(); ++i) l[i] = u(gen);
      const Eigen::VectorXd g = m.log_mgf_grad(l);
      for (int i = 0; i < m.dim(); ++i) {
        const double h = 1e-5;
        Eigen::VectorXd p = l, q = l;
        p[i] += h;
        q[i] -= h;
        const double fd = (m.log_mgf(p) - m.log_mgf(q)) / (2 * h);
        CHECK(std::abs(g[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}
