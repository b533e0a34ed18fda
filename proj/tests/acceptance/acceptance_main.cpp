// Acceptance gate: one PASS/FAIL line per criterion. Optional arguments pick a
// subset, e.g. `acceptance 1 2 11`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "brwfpt/asymptotics.hpp"
#include "brwfpt/brw_engine.hpp"
#include "brwfpt/config.hpp"
#include "brwfpt/errors.hpp"
#include "brwfpt/experiment.hpp"
#include "brwfpt/fpt_stats.hpp"
#include "brwfpt/rate_function.hpp"

using namespace brwfpt;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Shared between criteria 5 and 10, and 6 and 7.
std::optional<ExperimentResult> sweep5;
std::optional<ExperimentResult> sweep6;

const char* kConfig5 = R"({
  "experiment": "fpt_sweep",
  "model": {"kind": "gaussian", "dim": 3},
  "offspring": {"p0": 0, "p1": 0.5, "p3": 0.5},
  "x_values": [10, 15, 20],
  "samples": 2000,
  "q_c": 9000,
  "seed": 20240501
})";

const char* kConfig6 = R"({
  "experiment": "fpt_sweep",
  "model": {"kind": "uniform_sphere", "dim": 3},
  "offspring": {"p0": 0, "p1": 0.7, "p3": 0.3},
  "x_values": [8, 16, 24, 32],
  "samples": 500,
  "seed": 20240502
})";

Verdict criterion1() {
  std::mt19937_64 gen(101);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Eigen::MatrixXd sigma = oracle::random_spd(gen, 3);
    const double inv11 = sigma.inverse()(0, 0);
    for (double rho : {1.2, 2.0}) {
      const auto c = solve_c1_hat(RateFunction(JumpModel::gaussian(sigma), RateMode::Full), rho);
      worst = std::max(worst, rel(c.c1_hat, std::sqrt(2 * std::log(rho) / inv11)));
      worst = std::max(worst, rel(c.c2_vec[0], std::sqrt(2 * std::log(rho) * inv11)));
    }
  }
  return {worst <= 1e-8, fmt("max relative error %.3g (tolerance 1e-8)", worst)};
}

Verdict criterion2() {
  std::mt19937_64 gen(202);
  const auto base = JumpModel::gaussian(Eigen::Matrix3d::Identity());
  const double rho = 2.0;
  const auto zeta = solve_c1_hat(RateFunction(base, RateMode::Full), rho);
  double worst1 = 0.0, worst2 = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Eigen::MatrixXd t = oracle::random_invertible(gen, 3);
    const auto xi = solve_c1_hat(RateFunction(apply_linear_transform(base, t), RateMode::Full), rho);
    for (double x : {1.0, 7.5, 40.0}) {
      const Eigen::Vector3d point(x, 0, 0);
      worst1 = std::max(worst1, rel(x / xi.c1_hat, (t.inverse() * point).norm() / zeta.c1_hat));
    }
    worst2 = std::max(worst2, rel(xi.c1_hat * xi.c2_vec[0], zeta.c1_hat * zeta.c2_vec[0]));
  }
  return {worst1 < 1e-6 && worst2 < 1e-6,
          fmt("speed identity residual %.3g, tilt identity residual %.3g (tolerance 1e-6)", worst1, worst2)};
}

Verdict criterion3() {
  const std::vector<std::pair<double, double>> cases{{0.0, 0.1}, {0.004, 0.3}};
  std::string detail;
  bool pass = true;
  std::uint64_t stream = 0;
  for (const auto& [p0, p3] : cases) {
    const auto law = OffspringLaw::delayed(p0, 1.0 - p0 - p3, p3);
    const double expected = delayed_rho(p0, law.p1(), p3);
    double sum = 0.0;
    int kept = 0;
    while (kept < 200) {
      RngState rng(derive_replica_seed(303, 0, stream++, 0));
      const auto path = simulate_delayed_counts(law, 200, rng);
      if (path.extinct) continue;
      sum += (std::log(path.ordinary[200]) - std::log(path.ordinary[100])) / 100.0;
      ++kept;
    }
    const double growth = std::exp(sum / kept);
    const double err = rel(growth, expected);
    pass = pass && err <= 0.01;
    detail += fmt("(p0=%g, p3=%g): ", p0, p3) + fmt("growth %.6f vs %.6f, ", growth, expected) +
              fmt("rel err %.2e; ", err);
  }
  return {pass, detail + "tolerance 1%"};
}

Verdict criterion4() {
  double worst = 0.0;
  const std::vector<std::vector<double>> variances{{1.0, 1.0, 1.0}, {1.0, 1.5, 0.5}, {0.3, 2.0}, {2.5, 0.1, 4.0, 1.0}};
  for (const auto& vars : variances) {
    std::vector<Marginal> marginals;
    for (double v : vars) marginals.emplace_back(GaussianMarginal{v});
    const auto product = JumpModel::product(marginals);
    Eigen::VectorXd diag(static_cast<Eigen::Index>(vars.size()));
    for (std::size_t i = 0; i < vars.size(); ++i) diag[static_cast<Eigen::Index>(i)] = vars[i];
    const auto gaussian = JumpModel::gaussian(diag.asDiagonal().toDenseMatrix());
    for (double rho : {1.2, 1.6, 2.0, 3.0}) {
      for (const auto& m : {product, gaussian}) {
        const auto c = solve_c1_hat(RateFunction(m, RateMode::Full), rho);
        worst = std::max(worst, std::abs(c.c1_hat - c.c1_marginal));
      }
    }
  }
  return {worst <= 1e-10, fmt("max |c1_hat - c1_marginal| = %.3g (tolerance 1e-10)", worst)};
}

Verdict criterion5() {
  const auto plan = parse_config_text(kConfig5, "criterion5");
  sweep5 = run_experiment(plan, RunOptions{.workers = 8, .write_files = false});
  const double c = std::sqrt(2 * std::log(2.0));
  bool pass = sweep5->exit_code == 0;
  std::string detail;
  for (const auto& set : sweep5->sample_sets) {
    const double mean = summarize(set).mean;
    const double a = predict_A(set.x, c, c, 3).total;
    const double slack = 3 * std::log(std::log(set.x));
    pass = pass && std::abs(mean - a) <= slack && set.samples.size() == 2000;
    detail += fmt("x=%g: ", set.x) + fmt("mean %.3f, A(x) %.3f, ", mean, a) +
              fmt("|gap| %.3f <= %.3f; ", std::abs(mean - a), slack);
  }
  return {pass, detail};
}

Verdict criterion6() {
  const auto plan = parse_config_text(kConfig6, "criterion6");
  sweep6 = run_experiment(plan, RunOptions{.workers = 8, .write_files = false});
  const double c1 = solve_c1(RateFunction(plan.model, RateMode::Marginal), plan.offspring.rho());
  std::vector<FitPoint> pts;
  for (const auto& set : sweep6->sample_sets) pts.push_back({set.x, summarize(set).mean});
  const auto fit = fit_linear_log(pts);
  const double err = rel(fit.c1_hat_empirical, c1);
  return {sweep6->exit_code == 0 && err <= 0.10,
          fmt("fitted c1 %.4f vs solver c1 %.4f, ", fit.c1_hat_empirical, c1) +
              fmt("rel err %.3f (tolerance 0.10)", err)};
}

Verdict criterion7() {
  if (!sweep6) criterion6();
  const auto t = tightness_report(sweep6->sample_sets);
  std::string stds;
  for (const auto& [x, s] : t.std_by_x) stds += fmt("%g:%.3f ", x, s);
  return {t.max_ratio < 2.0, "std by x " + stds + fmt("max/min %.3f (limit 2)", t.max_ratio)};
}

Verdict criterion8() {
  auto plan = parse_config_text(R"({
    "model": {"kind": "gaussian", "dim": 3},
    "offspring": {"p0": 0, "p1": 0.5, "p3": 0.5},
    "x_values": [15], "samples": 500, "seed": 20240508, "q_c": 9000
  })");
  const auto purged = run_experiment(plan, RunOptions{.workers = 1, .write_files = false});
  plan.q_c = kNoPurge;
  plan.population_cap = 60'000'000;
  const auto unpurged = run_experiment(plan, RunOptions{.workers = 1, .write_files = false});
  if (purged.exit_code != 0 || unpurged.exit_code != 0) {
    std::map<std::string, int> why;
    for (const auto* arm : {&purged, &unpurged})
      for (const auto& r : arm->records)
        if (r.status != "hit") ++why[(arm == &purged ? "purged " : "unpurged ") + r.status + " " + r.error_code];
    std::string detail = "replica failures:";
    for (const auto& [k, n] : why) detail += " " + k + " x" + std::to_string(n) + ";";
    // informational only: bias over replicas where both arms hit
    double sa = 0, sb = 0;
    int paired = 0;
    for (std::size_t i = 0; i < purged.records.size() && i < unpurged.records.size(); ++i) {
      if (purged.records[i].status != "hit" || unpurged.records[i].status != "hit") continue;
      sa += *purged.records[i].tau;
      sb += *unpurged.records[i].tau;
      ++paired;
    }
    if (paired > 0)
      detail += fmt(" bias over %.0f paired hits %.4f", paired, std::abs(sa - sb) / sb);
    return {false, detail};
  }
  const double a = summarize(purged.sample_sets[0]).mean;
  const double b = summarize(unpurged.sample_sets[0]).mean;
  std::size_t peak = 0;
  for (const auto& r : unpurged.records) peak = std::max(peak, r.peak_size);
  const double bias = std::abs(a - b) / b;
  return {bias <= 0.02, fmt("purged %.3f, unpurged %.3f, relative bias %.4f (tolerance 0.02); ", a, b, bias) +
                            fmt("unpurged peak population %.0f", static_cast<double>(peak))};
}

Verdict criterion9() {
  const auto plan = parse_config_text(R"({
    "experiment": "frontier_count",
    "model": {"kind": "product", "marginals": [{"kind": "uniform", "half_width": 1}]},
    "offspring": {"p0": 0, "p1": 0.9, "p3": 0.1},
    "samples": 50, "seed": 20240509,
    "frontier": {"steps": 400, "offsets": [2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18], "method": "lattice"}
  })");
  const auto r = run_experiment(plan, RunOptions{.workers = 8, .write_files = false});
  if (r.exit_code != 0 || !r.sidecar["analysis"].contains("log_slope")) return {false, "frontier run failed"};
  const double c2 = r.sidecar["constants"]["c2"].get<double>();
  const double ratio = r.sidecar["analysis"]["log_slope_over_c2"].get<double>();
  return {ratio >= 0.7 && ratio <= 1.3 && r.sidecar["replicas_ok"] == 50,
          fmt("pooled slope %.4f, c2 %.4f, ratio %.3f (band [0.7, 1.3])",
              r.sidecar["analysis"]["log_slope"].get<double>(), c2, ratio)};
}

Verdict criterion10() {
  if (!sweep5) criterion5();
  const auto plan = parse_config_text(kConfig5, "criterion5");
  const auto single = run_experiment(plan, RunOptions{.workers = 1, .write_files = false});
  const bool same = single.csv == sweep5->csv;
  return {same && !single.csv.empty(),
          fmt("CSV bodies of %.0f bytes ", static_cast<double>(single.csv.size())) +
              (same ? "identical for 1 and 8 workers" : "differ between 1 and 8 workers")};
}

// Random catalog pair: a rate function, a point, and an independent log-MGF.
struct OraclePair {
  std::string name;
  RateFunction rf;
  Eigen::VectorXd x;
  std::function<double(const Eigen::VectorXd&)> log_mgf;
};

Verdict criterion11() {
  std::mt19937_64 gen(1111);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.3, 2.5);
  std::vector<OraclePair> pairs;

  // One-dimensional marginals.
  for (int k = 0; k < 30; ++k) {
    const double x = 0.7 * u(gen);
    switch (k % 6) {
      case 0:
      case 1: {
        const int d = 2 + k % 4;
        pairs.push_back({"sphere marginal d=" + std::to_string(d),
                         RateFunction(JumpModel::uniform_sphere(d), RateMode::Marginal), Eigen::VectorXd::Constant(1, x),
                         [d](const Eigen::VectorXd& l) { return oracle::sphere_log_mgf(d, l[0]); }});
        break;
      }
      case 2: {
        const double a = pos(gen);
        pairs.push_back({"uniform", RateFunction(JumpModel::product({UniformMarginal{a}}), RateMode::Marginal),
                         Eigen::VectorXd::Constant(1, a * x),
                         [a](const Eigen::VectorXd& l) { return oracle::uniform_log_mgf(a, l[0]); }});
        break;
      }
      case 3: {
        const double a = pos(gen);
        pairs.push_back({"two-point", RateFunction(JumpModel::product({TwoPointMarginal{a}}), RateMode::Marginal),
                         Eigen::VectorXd::Constant(1, a * x),
                         [a](const Eigen::VectorXd& l) { return oracle::two_point_log_mgf(a, l[0]); }});
        break;
      }
      case 4: {
        const Eigen::MatrixXd s = oracle::random_spd(gen, 3);
        const double v = s(0, 0);
        pairs.push_back({"gaussian marginal", RateFunction(JumpModel::gaussian(s), RateMode::Marginal),
                         Eigen::VectorXd::Constant(1, 3 * x),
                         [v](const Eigen::VectorXd& l) { return oracle::gaussian_log_mgf(v, l[0]); }});
        break;
      }
      default: {
        const Eigen::MatrixXd t = oracle::random_invertible(gen, 2);
        // First coordinate of T U is |T row 1| times a uniform-sphere marginal.
        const double scale = t.row(0).norm();
        pairs.push_back({"elliptical sphere marginal",
                         RateFunction(apply_linear_transform(JumpModel::uniform_sphere(2), t), RateMode::Marginal),
                         Eigen::VectorXd::Constant(1, scale * x),
                         [scale](const Eigen::VectorXd& l) { return oracle::sphere_log_mgf(2, scale * l[0]); }});
      }
    }
  }
  // Two-dimensional full transforms.
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector2d dir(u(gen), u(gen));
    dir *= 0.7 * std::abs(u(gen)) / std::max(dir.norm(), 1e-3);
    switch (k % 5) {
      case 0: {
        const Eigen::MatrixXd s = oracle::random_spd(gen, 2);
        pairs.push_back({"gaussian d=2", RateFunction(JumpModel::gaussian(s), RateMode::Full), 2.0 * dir,
                         [s](const Eigen::VectorXd& l) { return 0.5 * l.dot(s * l); }});
        break;
      }
      case 1:
        pairs.push_back({"sphere d=2", RateFunction(JumpModel::uniform_sphere(2), RateMode::Full), dir,
                         [](const Eigen::VectorXd& l) { return oracle::sphere_log_mgf(2, l.norm()); }});
        break;
      case 2: {
        const double a = pos(gen);
        pairs.push_back({"uniform x two-point",
                         RateFunction(JumpModel::product({UniformMarginal{a}, TwoPointMarginal{1.0}}), RateMode::Full),
                         Eigen::Vector2d(a * dir[0], dir[1]), [a](const Eigen::VectorXd& l) {
                           return oracle::uniform_log_mgf(a, l[0]) + oracle::two_point_log_mgf(1.0, l[1]);
                         }});
        break;
      }
      case 3: {
        const double v = pos(gen);
        pairs.push_back({"gaussian x uniform",
                         RateFunction(JumpModel::product({GaussianMarginal{v}, UniformMarginal{1.0}}), RateMode::Full),
                         Eigen::Vector2d(2.0 * dir[0], dir[1]), [v](const Eigen::VectorXd& l) {
                           return oracle::gaussian_log_mgf(v, l[0]) + oracle::uniform_log_mgf(1.0, l[1]);
                         }});
        break;
      }
      default: {
        const Eigen::MatrixXd t = oracle::random_invertible(gen, 2);
        pairs.push_back({"elliptical sphere d=2",
                         RateFunction(apply_linear_transform(JumpModel::uniform_sphere(2), t), RateMode::Full), t * dir,
                         [t](const Eigen::VectorXd& l) {
                           return oracle::sphere_log_mgf(2, (t.transpose() * l).norm());
                         }});
      }
    }
  }

  double worst = 0.0;
  std::string worst_name;
  for (const auto& p : pairs) {
    double expected;
    if (p.x.size() == 1) {
      expected = oracle::legendre_1d([&](double l) { return p.log_mgf(Eigen::VectorXd::Constant(1, l)); }, p.x[0],
                                     -60.0, 60.0, 1e-3)
                     .first;
    } else {
      expected = oracle::legendre_2d(
                     [&](double a, double b) { return p.log_mgf(Eigen::Vector2d(a, b)); },
                     Eigen::Vector2d(p.x[0], p.x[1]))
                     .first;
    }
    const double got = p.rf.legendre_transform(p.x).value;
    const double err = std::abs(got - expected) / std::max(1.0, std::abs(expected));
    if (err > worst) {
      worst = err;
      worst_name = p.name;
    }
  }
  return {worst <= 1e-8, fmt("%.0f pairs, worst error %.3g", static_cast<double>(pairs.size()), worst) +
                             " (" + worst_name + "), tolerance 1e-8"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Verdict()>>> all{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},  {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, run] : all) {
    if (!wanted.empty() && !wanted.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
