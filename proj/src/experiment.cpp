#include "brwfpt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "brwfpt/asymptotics.hpp"
#include "brwfpt/brw_engine.hpp"
#include "brwfpt/errors.hpp"
#include "brwfpt/frontier.hpp"
#include "brwfpt/rate_function.hpp"
#include "brwfpt/rng.hpp"

#ifndef BRWFPT_VERSION
#define BRWFPT_VERSION "unknown"
#endif

namespace brwfpt {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

template <typename Int>
std::string fmt_int(Int v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json prediction_json(const AsymptoticPrediction& p) {
  return {{"variant", to_string(p.variant)},
          {"leading", p.leading},
          {"log_correction", p.log_correction},
          {"total", p.total}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs task(i) for i in [0, n) on a pool. Each index is claimed exactly once,
// so results stored by index do not depend on the worker count.
template <typename Task>
void parallel_for(std::size_t n, unsigned workers, Task&& task) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
  };
  if (workers <= 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
}

struct OutputPaths {
  std::filesystem::path dir;
  std::string stem;
  std::filesystem::path file(const std::string& suffix) const { return dir / (stem + suffix); }
};

OutputPaths output_paths(const ExperimentPlan& plan, const RunOptions& options) {
  OutputPaths p;
  std::filesystem::path configured = plan.output;
  if (configured.empty()) {
    const std::filesystem::path src = plan.source_name;
    p.stem = src.stem().string();
    if (p.stem.empty() || p.stem == "<memory>") p.stem = "experiment";
  } else {
    p.stem = configured.filename().string();
  }
  if (options.out_dir) {
    p.dir = *options.out_dir;
  } else if (const char* env = std::getenv("FPT_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    p.dir = env;
  } else {
    p.dir = configured.has_parent_path() ? configured.parent_path() : std::filesystem::path(".");
  }
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text,
                std::vector<std::filesystem::path>& written) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  written.push_back(path);
}

json provenance(const ExperimentPlan& plan, std::uint64_t seed) {
  return {{"seed", seed},
          {"config_hash", plan.config_hash},
          {"config", plan.source_name},
          {"code_version", BRWFPT_VERSION},
          {"timestamp", utc_timestamp()},
          {"extinction_policy", to_string(plan.extinction_policy)},
          {"count_pending_hits", plan.count_pending_hits}};
}

// Theory constants shared by the sidecar and `fpt theory`.
struct Theory {
  json constants = json::object();
  json errors = json::array();
  std::optional<SpeedConstants> speed;
  std::optional<DelayedConstants> delayed;
};

Theory compute_theory(const ExperimentPlan& plan) {
  Theory t;
  auto record = [&](const char* what, const Error& e) {
    t.errors.push_back({{"quantity", what}, {"code", e.code()}, {"message", e.what()}});
  };
  t.constants["rho"] = plan.offspring.mean();
  t.constants["dim"] = plan.dim;
  t.constants["model"] = plan.model.describe();
  t.constants["offspring"] = plan.offspring.describe();
  if (plan.offspring.mode() == BranchingMode::Delayed) {
    try {
      t.constants["rho_tilde"] = plan.offspring.rho();
      t.delayed = delayed_constants(plan.model, plan.offspring);
      t.constants["c1_tilde"] = t.delayed->c1;
      t.constants["c2_tilde"] = t.delayed->c2;
    } catch (const Error& e) {
      record("delayed_constants", e);
    }
  }
  try {
    const double rho = plan.offspring.rho();
    t.speed = solve_c1_hat(RateFunction(plan.model, RateMode::Full), rho);
    t.constants["c1"] = t.speed->c1_marginal;
    t.constants["c2"] = t.speed->c2_marginal;
    t.constants["c1_hat"] = t.speed->c1_hat;
    t.constants["c2_vec"] = vec_json(t.speed->c2_vec);
    t.constants["purge_normal"] = vec_json(t.speed->c2_vec.normalized());
  } catch (const Error& e) {
    record("speed_constants", e);
  }
  return t;
}

std::optional<AsymptoticPrediction> primary_prediction(const ExperimentPlan& plan, const Theory& t,
                                                       double x) {
  if (!(x > 1.0)) return std::nullopt;
  if (plan.offspring.mode() == BranchingMode::Delayed) {
    if (t.delayed) return predict_A_tilde(x, *t.delayed, plan.dim);
    return std::nullopt;
  }
  if (!t.speed) return std::nullopt;
  if (plan.model.spherically_symmetric()) {
    return predict_A(x, t.speed->c1_marginal, t.speed->c2_marginal, plan.dim);
  }
  return predict_A_hat(x, *t.speed, plan.dim);
}

json predictions_json(const ExperimentPlan& plan, const Theory& t, double x) {
  json p = json::object();
  if (!(x > 1.0)) return p;
  if (t.speed) {
    p["A"] = prediction_json(predict_A(x, t.speed->c1_marginal, t.speed->c2_marginal, plan.dim));
    p["A_hat"] = prediction_json(predict_A_hat(x, *t.speed, plan.dim));
  }
  if (t.delayed) p["A_tilde"] = prediction_json(predict_A_tilde(x, *t.delayed, plan.dim));
  if (auto primary = primary_prediction(plan, t, x)) p["primary"] = to_string(primary->variant);
  return p;
}

ReplicaRecord run_replica(const ExperimentPlan& plan, const FptConfig& config, std::size_t x_index,
                          std::uint64_t replica, std::uint64_t master) {
  ReplicaRecord rec;
  rec.x_index = x_index;
  rec.replica = replica;
  rec.x = config.x;
  int restart = 0;
  try {
    FptOutcome out;
    if (plan.extinction_policy == ExtinctionPolicy::Restart) {
      out = run_fpt_conditioned(config, ReplicaKey{master, x_index, replica}, plan.max_restarts);
    } else {
      rec.seed = derive_replica_seed(master, x_index, replica, 0);
      out = run_fpt(config, rec.seed);
      out.replica_seed = rec.seed;
    }
    restart = out.restarts;
    rec.seed = out.replica_seed;
    rec.peak_size = out.peak_size;
    rec.purge_events = out.purge_events;
    rec.restarts = out.restarts;
    rec.status = to_string(out.status);
    if (out.status == FptStatus::Hit) rec.tau = out.tau;
  } catch (const SurvivalConditioningFailed& e) {
    rec.status = "conditioning_failed";
    rec.restarts = e.attempts() - 1;
    rec.seed = e.last_seed();
    rec.error_code = e.code();
    rec.error_message = e.what();
  } catch (const Error& e) {
    rec.status = "error";
    rec.restarts = restart;
    if (rec.seed == 0) rec.seed = derive_replica_seed(master, x_index, replica, 0);
    rec.error_code = e.code();
    rec.error_message = e.what();
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error_code = "InternalError";
    rec.error_message = e.what();
  }
  return rec;
}

ExperimentResult run_sweep(const ExperimentPlan& plan, const RunOptions& options) {
  ExperimentResult result;
  const std::uint64_t master = options.seed.value_or(plan.master_seed);
  const Theory theory = compute_theory(plan);

  std::vector<FptConfig> configs;
  json config_errors = json::array();
  bool configs_ok = true;
  for (double x : plan.x_values) {
    FptConfig c{.model = plan.model,
                .offspring = plan.offspring,
                .x = x,
                .radius = plan.radius,
                .q_c = plan.q_c,
                .max_steps = plan.max_steps,
                .count_pending_hits = plan.count_pending_hits,
                .population_cap = plan.population_cap,
                .normal = std::nullopt};
    try {
      c.validate();
    } catch (const Error& e) {
      configs_ok = false;
      config_errors.push_back({{"x", x}, {"code", e.code()}, {"message", e.what()}});
    }
    try {
      c.resolve_normal();
    } catch (const Error&) {
      // Left unset: run_fpt solves for it when a purge is due and the
      // replica records the failure.
    }
    configs.push_back(std::move(c));
  }

  const std::size_t nx = plan.x_values.size();
  const std::size_t per_x = plan.samples;
  if (configs_ok) {
    result.records.resize(nx * per_x);
    parallel_for(nx * per_x, resolve_workers(options.workers), [&](std::size_t task) {
      const std::size_t xi = task / per_x;
      const std::uint64_t rep = task % per_x;
      result.records[task] = run_replica(plan, configs[xi], xi, rep, master);
    });
  }
  result.csv = sweep_csv(result.records);

  json per_x_json = json::array();
  json analysis_errors = json::array();
  json error_records = json::array();
  std::vector<FitPoint> fit_points;
  for (std::size_t xi = 0; xi < nx; ++xi) {
    FptSampleSet set;
    set.x = plan.x_values[xi];
    set.master_seed = master;
    set.replica_begin = 0;
    set.replica_end = per_x;
    for (std::size_t r = 0; configs_ok && r < per_x; ++r) {
      const ReplicaRecord& rec = result.records[xi * per_x + r];
      if (rec.tau) set.samples.push_back(*rec.tau);
      if (plan.extinction_policy == ExtinctionPolicy::Restart) {
        set.n_extinct += static_cast<std::size_t>(std::max(rec.restarts, 0));
      }
      if (rec.status == "extinct") ++set.n_extinct;
      if (rec.status == "conditioning_failed") ++set.n_extinct;
      if (rec.status == "timeout") ++set.n_timeout;
      if (rec.status == "conditioning_failed" || rec.status == "error") {
        ++set.n_failed;
        error_records.push_back({{"x", rec.x},
                                 {"x_index", rec.x_index},
                                 {"replica", rec.replica},
                                 {"restart", rec.restarts},
                                 {"seed", rec.seed},
                                 {"code", rec.error_code},
                                 {"message", rec.error_message}});
      }
    }
    json entry = {{"x", set.x},
                  {"n_samples", set.samples.size()},
                  {"n_extinct", set.n_extinct},
                  {"n_timeout", set.n_timeout},
                  {"n_failed", set.n_failed},
                  {"predictions", predictions_json(plan, theory, set.x)}};
    try {
      const FptSummary s = summarize(set);
      json q = json::object();
      for (std::size_t k = 0; k < kSummaryLevels.size(); ++k) q[fmt(kSummaryLevels[k])] = s.quantiles[k];
      entry["summary"] = {{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"quantiles", q}};
      fit_points.push_back({set.x, s.mean});
      if (auto p = primary_prediction(plan, theory, set.x)) {
        const TheoryGap gap = compare_to_theory(set, *p);
        entry["gap"] = {{"variant", to_string(p->variant)},
                        {"prediction", p->total},
                        {"gap_mean", gap.gap_mean},
                        {"gap_median", gap.gap_median}};
      }
    } catch (const Error& e) {
      analysis_errors.push_back({{"x", set.x}, {"code", e.code()}, {"message", e.what()}});
    }
    per_x_json.push_back(std::move(entry));
    result.sample_sets.push_back(std::move(set));
  }

  json analysis = json::object();
  try {
    const FitResult fit = fit_linear_log(fit_points);
    analysis["fit"] = {{"inv_c1", fit.inv_c1},
                       {"log_coefficient", fit.log_coefficient},
                       {"constant", fit.constant},
                       {"residual_rms", fit.residual_rms},
                       {"c1_hat_empirical", fit.c1_hat_empirical},
                       {"condition_number", fit.condition_number}};
  } catch (const Error& e) {
    analysis_errors.push_back({{"quantity", "fit"}, {"code", e.code()}, {"message", e.what()}});
  }
  try {
    const TightnessReport t = tightness_report(result.sample_sets);
    json by_x = json::array();
    for (const auto& [x, s] : t.std_by_x) by_x.push_back({{"x", x}, {"std", s}});
    analysis["tightness"] = {{"std_by_x", by_x}, {"max_ratio", t.max_ratio}};
  } catch (const Error& e) {
    analysis_errors.push_back({{"quantity", "tightness"}, {"code", e.code()}, {"message", e.what()}});
  }
  analysis["errors"] = analysis_errors;

  result.sidecar = {{"experiment", to_string(plan.kind)},
                    {"constants", theory.constants},
                    {"theory_errors", theory.errors},
                    {"plan",
                     {{"x_values", plan.x_values},
                      {"samples", plan.samples},
                      {"radius", plan.radius},
                      {"q_c", plan.q_c == kNoPurge ? json("inf") : json(plan.q_c)},
                      {"max_steps", plan.max_steps},
                      {"max_restarts", plan.max_restarts},
                      {"population_cap", plan.population_cap}}},
                    {"per_x", per_x_json},
                    {"analysis", analysis},
                    {"provenance", provenance(plan, master)}};
  if (!config_errors.empty() || !error_records.empty()) {
    result.exit_code = 1;
    result.sidecar["errors"] = {{"config", config_errors}, {"replicas", error_records}};
  }
  return result;
}

}  // namespace

std::string sweep_csv(const std::vector<ReplicaRecord>& records) {
  std::string out = "x,replica,tau,status,peak_size,purge_events,restarts\n";
  for (const auto& r : records) {
    out += fmt(r.x);
    out += ',';
    out += fmt_int(r.replica);
    out += ',';
    if (r.tau) out += fmt_int(*r.tau);
    out += ',';
    out += r.status;
    out += ',';
    out += fmt_int(r.peak_size);
    out += ',';
    out += fmt_int(r.purge_events);
    out += ',';
    out += fmt_int(r.restarts);
    out += '\n';
  }
  return out;
}

json theory_report(const ExperimentPlan& plan) {
  const Theory t = compute_theory(plan);
  json per_x = json::array();
  for (double x : plan.x_values) {
    try {
      per_x.push_back({{"x", x}, {"predictions", predictions_json(plan, t, x)}});
    } catch (const Error& e) {
      per_x.push_back({{"x", x}, {"error", {{"code", e.code()}, {"message", e.what()}}}});
    }
  }
  return {{"experiment", to_string(ExperimentKind::TheoryOnly)},
          {"constants", t.constants},
          {"per_x", per_x},
          {"errors", t.errors}};
}

namespace {

ExperimentResult run_frontier_experiment(const ExperimentPlan& plan, const RunOptions& options) {
  ExperimentResult result;
  const std::uint64_t master = options.seed.value_or(plan.master_seed);
  if (!plan.frontier) throw ConfigError("frontier section missing");
  const FrontierPlan& fp = *plan.frontier;

  const RateFunction marginal(plan.model, RateMode::Marginal);
  const double c1 = solve_c1(marginal, plan.offspring.rho());
  const double c2 = marginal.along_first_axis(c1).maximizer[0];
  const FrontierConfig cfg{.model = plan.model,
                           .offspring = plan.offspring,
                           .steps = fp.steps,
                           .offsets = fp.offsets,
                           .method = fp.method,
                           .population_cap = plan.population_cap,
                           .lattice_spacing = fp.lattice_spacing,
                           .exact_limit = fp.exact_limit,
                           .max_restarts = plan.max_restarts,
                           .c1 = c1,
                           .c2 = c2};
  cfg.validate();

  struct Slot {
    std::optional<FrontierResult> value;
    std::uint64_t seed = 0;
    std::string code, message;
  };
  std::vector<Slot> slots(plan.samples);
  parallel_for(plan.samples, resolve_workers(options.workers), [&](std::size_t r) {
    Slot& s = slots[r];
    try {
      s.seed = derive_replica_seed(master, 0, r, 0);
      s.value = run_frontier_count(cfg, s.seed);
    } catch (const Error& e) {
      s.code = e.code();
      s.message = e.what();
    }
  });

  std::string csv = "replica,offset,count,m_n,max_position,restarts\n";
  std::vector<FrontierCount> pooled;
  for (double x : fp.offsets) pooled.push_back({x, 0.0});
  json errors = json::array();
  std::size_t ok = 0;
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const Slot& s = slots[r];
    if (!s.value) {
      errors.push_back({{"replica", r}, {"seed", s.seed}, {"code", s.code}, {"message", s.message}});
      continue;
    }
    ++ok;
    for (std::size_t k = 0; k < s.value->counts.size(); ++k) {
      const auto& c = s.value->counts[k];
      pooled[k].count += c.count;
      csv += fmt_int(r) + ',' + fmt(c.offset) + ',' + fmt(c.count) + ',' + fmt(s.value->m_n) + ',' +
             fmt(s.value->max_position) + ',' + fmt_int(s.value->restarts) + '\n';
    }
  }
  result.csv = std::move(csv);

  json analysis = json::object();
  json pooled_json = json::array();
  for (const auto& c : pooled) pooled_json.push_back({{"offset", c.offset}, {"count", c.count}});
  analysis["pooled_counts"] = pooled_json;
  try {
    const double slope = frontier_log_slope(pooled);
    analysis["log_slope"] = slope;
    analysis["log_slope_over_c2"] = slope / c2;
  } catch (const Error& e) {
    analysis["error"] = {{"code", e.code()}, {"message", e.what()}};
  }
  result.sidecar = {{"experiment", to_string(plan.kind)},
                    {"constants",
                     {{"rho", plan.offspring.rho()},
                      {"c1", c1},
                      {"c2", c2},
                      {"m_n", frontier_centering(c1, c2, fp.steps)}}},
                    {"plan",
                     {{"steps", fp.steps},
                      {"offsets", fp.offsets},
                      {"samples", plan.samples},
                      {"method", fp.method == FrontierMethod::Lattice ? "lattice" : "exact"},
                      {"lattice_spacing", fp.lattice_spacing},
                      {"exact_limit", fp.exact_limit}}},
                    {"replicas_ok", ok},
                    {"analysis", analysis},
                    {"provenance", provenance(plan, master)}};
  if (!errors.empty()) {
    result.exit_code = 1;
    result.sidecar["errors"] = {{"replicas", errors}};
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan, const RunOptions& options) {
  ExperimentResult result;
  switch (plan.kind) {
    case ExperimentKind::FptSweep:
      result = run_sweep(plan, options);
      break;
    case ExperimentKind::FrontierCount:
      result = run_frontier_experiment(plan, options);
      break;
    case ExperimentKind::TheoryOnly:
      result.sidecar = theory_report(plan);
      result.sidecar["provenance"] = provenance(plan, options.seed.value_or(plan.master_seed));
      break;
  }
  if (!options.write_files) return result;

  const OutputPaths paths = output_paths(plan, options);
  if (!result.csv.empty()) write_text(paths.file(".csv"), result.csv, result.written);
  write_text(paths.file(".json"), result.sidecar.dump(2) + "\n", result.written);
  if (result.exit_code != 0 && result.sidecar.contains("errors")) {
    write_text(paths.file(".errors.json"), result.sidecar["errors"].dump(2) + "\n", result.written);
  }
  return result;
}

json fit_sweep_csv(const std::vector<std::filesystem::path>& paths) {
  std::map<double, std::pair<double, std::size_t>> by_x;  // x -> (sum tau, n)
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw ParseError("<file>", 0, "cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    int col_x = -1, col_tau = -1, col_status = -1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (line.back() == ',') cells.emplace_back();
      if (lineno == 1) {
        for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
          if (cells[i] == "x") col_x = i;
          if (cells[i] == "tau") col_tau = i;
          if (cells[i] == "status") col_status = i;
        }
        if (col_x < 0 || col_tau < 0 || col_status < 0) {
          throw ParseError("header", lineno, path.string() + " is not a sweep CSV");
        }
        continue;
      }
      const int need = std::max({col_x, col_tau, col_status});
      if (static_cast<int>(cells.size()) <= need) throw ParseError("row", lineno, "short row in " + path.string());
      if (cells[col_status] != "hit") continue;
      double x = 0.0, tau = 0.0;
      const auto& cx = cells[col_x];
      const auto& ct = cells[col_tau];
      if (std::from_chars(cx.data(), cx.data() + cx.size(), x).ec != std::errc{} ||
          std::from_chars(ct.data(), ct.data() + ct.size(), tau).ec != std::errc{}) {
        throw ParseError("row", lineno, "bad number in " + path.string());
      }
      auto& acc = by_x[x];
      acc.first += tau;
      acc.second += 1;
    }
  }
  std::vector<FitPoint> points;
  json means = json::array();
  for (const auto& [x, acc] : by_x) {
    const double mean = acc.first / static_cast<double>(acc.second);
    points.push_back({x, mean});
    means.push_back({{"x", x}, {"n", acc.second}, {"mean_tau", mean}});
  }
  const FitResult fit = fit_linear_log(points);
  return {{"points", means},
          {"fit",
           {{"inv_c1", fit.inv_c1},
            {"log_coefficient", fit.log_coefficient},
            {"constant", fit.constant},
            {"residual_rms", fit.residual_rms},
            {"c1_hat_empirical", fit.c1_hat_empirical},
            {"condition_number", fit.condition_number}}}};
}

}  // namespace brwfpt
