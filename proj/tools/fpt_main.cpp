#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brwfpt/config.hpp"
#include "brwfpt/errors.hpp"
#include "brwfpt/experiment.hpp"

namespace {

using brwfpt::ExperimentKind;

// Machine-readable error record on stderr.
int report(const brwfpt::Error& e) {
  nlohmann::json rec = {{"code", e.code()}, {"message", e.what()}};
  if (const auto* pe = dynamic_cast<const brwfpt::ParseError*>(&e)) {
    rec["field"] = pe->field();
    rec["line"] = pe->line();
  }
  if (const auto* ve = dynamic_cast<const brwfpt::ValidationError*>(&e)) {
    rec["violations"] = ve->violations();
  }
  std::cerr << rec.dump() << "\n";
  return 2;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the master seed");
  cmd->add_option("--workers", c.workers, "worker threads (default: hardware concurrency)");
  cmd->add_option("--out", c.out, "output directory");
}

int execute(const Common& c, std::optional<ExperimentKind> expect) {
  brwfpt::ExperimentPlan plan = brwfpt::parse_config(c.config);
  if (expect) {
    if (*expect == ExperimentKind::TheoryOnly) {
      plan.kind = ExperimentKind::TheoryOnly;
    } else if (plan.kind != *expect) {
      throw brwfpt::ConfigError(std::string("config describes a ") + brwfpt::to_string(plan.kind) +
                                " experiment, expected " + brwfpt::to_string(*expect));
    }
  }
  brwfpt::RunOptions opts;
  opts.workers = c.workers;
  opts.seed = c.seed;
  if (c.out) opts.out_dir = *c.out;
  const auto result = brwfpt::run_experiment(plan, opts);
  for (const auto& p : result.written) std::cout << p.string() << "\n";
  if (plan.kind == ExperimentKind::TheoryOnly) std::cout << result.sidecar.dump(2) << "\n";
  if (result.exit_code != 0 && result.sidecar.contains("errors")) {
    std::cerr << result.sidecar["errors"].dump() << "\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk first-passage experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BRWFPT_CLI_VERSION);

  Common run_opts, theory_opts, frontier_opts;
  auto* run = app.add_subcommand("run", "simulate an FPT sweep");
  add_common(run, run_opts);
  auto* theory = app.add_subcommand("theory", "constants and predictions only");
  add_common(theory, theory_opts);
  auto* frontier = app.add_subcommand("frontier", "one-dimensional frontier counts");
  add_common(frontier, frontier_opts);

  std::vector<std::string> csvs;
  auto* fit = app.add_subcommand("fit", "fit x/c1 + B log x + C to sweep CSVs");
  fit->add_option("csv", csvs, "sweep CSV files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return execute(run_opts, std::nullopt);
    if (*theory) return execute(theory_opts, ExperimentKind::TheoryOnly);
    if (*frontier) return execute(frontier_opts, ExperimentKind::FrontierCount);
    if (*fit) {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      std::cout << brwfpt::fit_sweep_csv(paths).dump(2) << "\n";
      return 0;
    }
  } catch (const brwfpt::Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"code", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 0;
}
