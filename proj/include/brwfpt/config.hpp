#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "brwfpt/brw_engine.hpp"
#include "brwfpt/frontier.hpp"
#include "brwfpt/jump_model.hpp"
#include "brwfpt/offspring.hpp"

namespace brwfpt {

enum class ExperimentKind { FptSweep, FrontierCount, TheoryOnly };
enum class ExtinctionPolicy { Restart, Discard };

const char* to_string(ExperimentKind k);
const char* to_string(ExtinctionPolicy p);

struct FrontierPlan {
  int steps = 0;
  std::vector<double> offsets;
  FrontierMethod method = FrontierMethod::Exact;
  double lattice_spacing = 0.05;
  double exact_limit = 1e6;
};

// A validated experiment description. See README.md for the file schema.
struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::FptSweep;
  nlohmann::json model_spec;
  JumpModel model = JumpModel::uniform_sphere(1);
  OffspringLaw offspring = OffspringLaw::classical(0.0, 1.0, 0.0);
  int dim = 1;
  std::vector<double> x_values;
  double radius = 1.0;
  std::uint64_t q_c = 9000;
  std::size_t samples = 0;
  std::int64_t max_steps = 0;
  std::uint64_t master_seed = 0;
  bool count_pending_hits = true;
  ExtinctionPolicy extinction_policy = ExtinctionPolicy::Restart;
  int max_restarts = 1000;
  std::size_t population_cap = kDefaultPopulationCap;
  std::string output;  // path prefix; empty means derive from the config name
  std::optional<FrontierPlan> frontier;
  std::string config_hash;  // FNV-1a 64 of the config text, hex
  std::string source_name;
};

// Builds a JumpModel from the model grammar, e.g.
//   {"kind": "gaussian", "dim": 3, "covariance": [1,0,0, 0,1,0, 0,0,1]}
// Throws ParseError on malformed entries.
JumpModel parse_model_spec(const nlohmann::json& spec, std::string_view text = {});

// Throws ParseError (syntax, types) or ValidationError (every violated
// invariant, including unknown keys).
ExperimentPlan parse_config_text(std::string_view text, std::string source_name = "<memory>");
ExperimentPlan parse_config(const std::filesystem::path& path);

std::string fnv1a64_hex(std::string_view bytes);

}  // namespace brwfpt
