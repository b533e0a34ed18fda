#include "brwfpt/fpt_stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "brwfpt/errors.hpp"

namespace brwfpt {

std::int64_t empirical_quantile(std::span<const std::int64_t> sorted, double r) {
  if (sorted.empty()) throw InsufficientSamples("quantile of an empty sample");
  if (!(r > 0.0 && r <= 1.0)) throw DomainError("quantile level must lie in (0, 1]");
  const double n = static_cast<double>(sorted.size());
  // the 1e-9 guard keeps e.g. 0.05 * 100 from rounding up to 6
  auto rank = static_cast<std::size_t>(std::ceil(r * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

FptSummary summarize(const FptSampleSet& set) {
  if (set.samples.size() < 2) {
    throw InsufficientSamples("summary needs at least 2 hit samples at x = " + std::to_string(set.x));
  }
  std::vector<std::int64_t> sorted = set.samples;
  std::sort(sorted.begin(), sorted.end());
  FptSummary s;
  s.n = sorted.size();
  // Sum in sorted order so the result does not depend on sample order.
  double sum = 0.0;
  for (auto v : sorted) sum += static_cast<double>(v);
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (auto v : sorted) ss += (static_cast<double>(v) - s.mean) * (static_cast<double>(v) - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  for (std::size_t k = 0; k < kSummaryLevels.size(); ++k) {
    s.quantiles[k] = empirical_quantile(sorted, kSummaryLevels[k]);
  }
  return s;
}

FitResult fit_linear_log(std::span<const FitPoint> points) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.x > 1.0) || !std::isfinite(p.mean_tau)) {
      throw DomainError("fit points need x > 1 and finite mean");
    }
    distinct.insert(p.x);
  }
  if (distinct.size() < 3) throw InsufficientSamples("fit needs at least 3 distinct x values");

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = points[static_cast<std::size_t>(i)].x;
    design(i, 0) = x;
    design(i, 1) = std::log(x);
    design(i, 2) = 1.0;
    y[i] = points[static_cast<std::size_t>(i)].mean_tau;
  }
  const Eigen::VectorXd scale = design.colwise().norm().transpose();
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double condition = sv[0] / sv[sv.size() - 1];
  if (!(condition <= 1e12)) throw SingularDesign(condition);
  const Eigen::VectorXd coef = svd.solve(y).cwiseQuotient(scale);

  FitResult fit;
  fit.inv_c1 = coef[0];
  fit.log_coefficient = coef[1];
  fit.constant = coef[2];
  fit.residual_rms = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
  fit.c1_hat_empirical = 1.0 / fit.inv_c1;
  fit.condition_number = condition;
  return fit;
}

TightnessReport tightness_report(std::span<const FptSampleSet> sets) {
  std::set<double> distinct;
  for (const auto& s : sets) distinct.insert(s.x);
  if (distinct.size() < 2) throw InsufficientSamples("tightness needs sample sets at >= 2 distinct x");
  TightnessReport report;
  double lo = INFINITY;
  double hi = 0.0;
  for (const auto& s : sets) {
    const double sd = summarize(s).std;
    report.std_by_x.emplace_back(s.x, sd);
    lo = std::min(lo, sd);
    hi = std::max(hi, sd);
  }
  report.max_ratio = hi / lo;
  return report;
}

TheoryGap compare_to_theory(const FptSampleSet& set, const AsymptoticPrediction& prediction) {
  if (set.samples.empty()) throw InsufficientSamples("no hit samples at x = " + std::to_string(set.x));
  std::vector<std::int64_t> sorted = set.samples;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (auto v : sorted) sum += static_cast<double>(v);
  const double mean = sum / static_cast<double>(sorted.size());
  TheoryGap gap;
  gap.gap_mean = mean - prediction.total;
  gap.gap_median = static_cast<double>(empirical_quantile(sorted, 0.5)) - prediction.total;
  return gap;
}

}  // namespace brwfpt
