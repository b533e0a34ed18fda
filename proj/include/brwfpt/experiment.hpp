#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brwfpt/config.hpp"
#include "brwfpt/fpt_stats.hpp"

namespace brwfpt {

struct RunOptions {
  unsigned workers = 0;  // 0: std::thread::hardware_concurrency()
  std::optional<std::uint64_t> seed;  // overrides plan.master_seed
  // Output directory. Falls back to $FPT_OUTPUT_DIR, then to the directory of
  // plan.output (or the working directory).
  std::optional<std::filesystem::path> out_dir;
  bool write_files = true;
};

// One line of the sweep CSV.
struct ReplicaRecord {
  std::size_t x_index = 0;
  std::uint64_t replica = 0;
  double x = 0.0;
  std::string status;  // hit, extinct, timeout, conditioning_failed, error
  std::optional<std::int64_t> tau;
  std::size_t peak_size = 0;
  std::int64_t purge_events = 0;
  int restarts = 0;
  std::uint64_t seed = 0;  // seed of the last run of this replica
  std::string error_code;
  std::string error_message;
};

struct ExperimentResult {
  int exit_code = 0;
  std::vector<ReplicaRecord> records;     // sorted by (x_index, replica)
  std::vector<FptSampleSet> sample_sets;  // one per x
  std::string csv;                        // header plus body
  nlohmann::json sidecar;
  std::vector<std::filesystem::path> written;
};

// Constants and predictions of a plan without simulation. Failures of
// individual constants are listed under "errors" rather than thrown.
nlohmann::json theory_report(const ExperimentPlan& plan);

ExperimentResult run_experiment(const ExperimentPlan& plan, const RunOptions& options = {});

std::string sweep_csv(const std::vector<ReplicaRecord>& records);

// Reads sweep CSVs, averages hit times per x and fits the linear-log model.
nlohmann::json fit_sweep_csv(const std::vector<std::filesystem::path>& paths);

}  // namespace brwfpt
