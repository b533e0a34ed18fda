#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace brwfpt {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached n-point Gauss-Legendre rule. Thread-safe; the returned reference stays
// valid for the program lifetime.
const GaussLegendreRule& gauss_legendre(std::size_t n);

struct AdaptiveQuadratureOptions {
  std::size_t initial_nodes = 200;
  std::size_t max_nodes = 12800;
  double relative_tolerance = 1e-12;
};

// Integrates f over [a, b] with Gauss-Legendre, doubling the node count until two
// successive rules agree to the relative tolerance. Throws QuadratureFailure.
double integrate_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                                const AdaptiveQuadratureOptions& options = {});

}  // namespace brwfpt
