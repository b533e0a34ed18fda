#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "brwfpt/asymptotics.hpp"

namespace brwfpt {

// Hit times at one target distance. Extinct and timed-out replicas are not
// samples; they are only counted.
struct FptSampleSet {
  double x = 0.0;
  std::vector<std::int64_t> samples;
  std::size_t n_extinct = 0;
  std::size_t n_timeout = 0;
  std::size_t n_failed = 0;  // conditioning failures and replica errors
  std::uint64_t master_seed = 0;
  std::uint64_t replica_begin = 0;
  std::uint64_t replica_end = 0;
};

inline constexpr std::array<double, 5> kSummaryLevels{0.05, 0.25, 0.5, 0.75, 0.95};

struct FptSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator
  std::array<std::int64_t, kSummaryLevels.size()> quantiles{};
};

// Lower empirical quantile: the ceil(r n)-th order statistic (1-based).
std::int64_t empirical_quantile(std::span<const std::int64_t> sorted, double r);

// Requires >= 2 samples (InsufficientSamples).
FptSummary summarize(const FptSampleSet& set);

struct FitPoint {
  double x = 0.0;
  double mean_tau = 0.0;
};

// E[tau_x] ~ inv_c1 * x + log_coefficient * log x + constant.
struct FitResult {
  double inv_c1 = 0.0;
  double log_coefficient = 0.0;
  double constant = 0.0;
  double residual_rms = 0.0;
  double c1_hat_empirical = 0.0;
  double condition_number = 0.0;
};

// Least squares in the basis {x, log x, 1} through an SVD of the column-scaled
// design. Needs >= 3 distinct x > 1 (InsufficientSamples, DomainError);
// SingularDesign when the condition number exceeds 1e12.
FitResult fit_linear_log(std::span<const FitPoint> points);

struct TightnessReport {
  std::vector<std::pair<double, double>> std_by_x;  // (x, std)
  double max_ratio = 0.0;                           // max std / min std
};

TightnessReport tightness_report(std::span<const FptSampleSet> sets);

struct TheoryGap {
  double gap_mean = 0.0;    // empirical mean - prediction
  double gap_median = 0.0;  // lower median - prediction
};

TheoryGap compare_to_theory(const FptSampleSet& set, const AsymptoticPrediction& prediction);

}  // namespace brwfpt
