#include "brwfpt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "brwfpt/errors.hpp"
#include "brwfpt/rate_function.hpp"

namespace brwfpt {

using nlohmann::json;

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::FptSweep: return "fpt_sweep";
    case ExperimentKind::FrontierCount: return "frontier_count";
    case ExperimentKind::TheoryOnly: return "theory_only";
  }
  return "unknown";
}

const char* to_string(ExtinctionPolicy p) {
  return p == ExtinctionPolicy::Restart ? "restart" : "discard";
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Best-effort source line for a key: its first quoted occurrence.
std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string needle = "\"" + std::string(key) + "\"";
  const auto pos = text.find(needle);
  return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    const auto dot = field.find_last_of('.');
    const std::string key = dot == std::string::npos ? field : field.substr(dot + 1);
    throw ParseError(field, line_of_key(text_, key), what);
  }

  double number(const json& j, const std::string& field) const {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
  }
  std::int64_t integer(const json& j, const std::string& field) const {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (std::floor(v) == v && std::abs(v) < 9.0e15) return static_cast<std::int64_t>(v);
    }
    fail(field, "expected an integer");
  }
  std::uint64_t unsigned_integer(const json& j, const std::string& field) const {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    const auto v = integer(j, field);
    if (v < 0) fail(field, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }
  bool boolean(const json& j, const std::string& field) const {
    if (!j.is_boolean()) fail(field, "expected true or false");
    return j.get<bool>();
  }
  std::string string(const json& j, const std::string& field) const {
    if (!j.is_string()) fail(field, "expected a string");
    return j.get<std::string>();
  }
  std::vector<double> numbers(const json& j, const std::string& field) const {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, field));
    return out;
  }
  const json& object(const json& j, const std::string& field) const {
    if (!j.is_object()) fail(field, "expected an object");
    return j;
  }

 private:
  std::string_view text_;
};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& prefix,
                std::vector<std::string>& violations) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      violations.push_back("unknown key '" + prefix + key + "'");
    }
  }
}

Eigen::MatrixXd square_matrix(const Reader& r, const json& j, const std::string& field,
                              std::optional<int> dim) {
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = r.numbers(j[static_cast<std::size_t>(i)], field);
      if (static_cast<Eigen::Index>(row.size()) != n) r.fail(field, "matrix must be square");
      for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
    }
    return m;
  }
  const auto flat = r.numbers(j, field);
  const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
  if (n < 1 || static_cast<std::size_t>(n) * static_cast<std::size_t>(n) != flat.size()) {
    r.fail(field, "row-major matrix needs d*d entries");
  }
  if (dim && *dim != n) r.fail(field, "matrix size does not match dim");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) m(i, k) = flat[static_cast<std::size_t>(i * n + k)];
  return m;
}

JumpModel parse_model(const Reader& r, const json& spec, const std::string& field) {
  r.object(spec, field);
  if (!spec.contains("kind")) r.fail(field + ".kind", "missing model kind");
  const std::string kind = r.string(spec["kind"], field + ".kind");
  std::optional<int> dim;
  if (spec.contains("dim")) dim = static_cast<int>(r.integer(spec["dim"], field + ".dim"));

  auto reject_extra = [&](const std::set<std::string>& allowed) {
    for (const auto& [key, value] : spec.items()) {
      if (!allowed.contains(key)) r.fail(field + "." + key, "unknown key for model kind " + kind);
    }
  };

  try {
    if (kind == "uniform_sphere") {
      reject_extra({"kind", "dim"});
      if (!dim) r.fail(field + ".dim", "uniform_sphere needs dim");
      return JumpModel::uniform_sphere(*dim);
    }
    if (kind == "gaussian") {
      reject_extra({"kind", "dim", "covariance"});
      if (!spec.contains("covariance")) {
        if (!dim) r.fail(field + ".dim", "gaussian needs dim or covariance");
        return JumpModel::gaussian(Eigen::MatrixXd::Identity(*dim, *dim));
      }
      return JumpModel::gaussian(square_matrix(r, spec["covariance"], field + ".covariance", dim));
    }
    if (kind == "product") {
      reject_extra({"kind", "dim", "marginals"});
      if (!spec.contains("marginals") || !spec["marginals"].is_array()) {
        r.fail(field + ".marginals", "product needs an array of marginals");
      }
      std::vector<Marginal> marginals;
      for (const auto& m : spec["marginals"]) {
        const std::string mf = field + ".marginals";
        r.object(m, mf);
        if (!m.contains("kind")) r.fail(mf + ".kind", "missing marginal kind");
        const std::string mk = r.string(m["kind"], mf + ".kind");
        for (const auto& [key, value] : m.items()) {
          const bool ok = key == "kind" || (mk == "gaussian" ? key == "variance" : key == "half_width");
          if (!ok) r.fail(mf + "." + key, "unknown key for marginal kind " + mk);
        }
        if (mk == "uniform") {
          marginals.emplace_back(UniformMarginal{m.contains("half_width") ? r.number(m["half_width"], mf + ".half_width") : 1.0});
        } else if (mk == "gaussian") {
          marginals.emplace_back(GaussianMarginal{m.contains("variance") ? r.number(m["variance"], mf + ".variance") : 1.0});
        } else if (mk == "two_point") {
          marginals.emplace_back(TwoPointMarginal{m.contains("half_width") ? r.number(m["half_width"], mf + ".half_width") : 1.0});
        } else {
          r.fail(mf + ".kind", "unknown marginal kind '" + mk + "'");
        }
      }
      if (dim && *dim != static_cast<int>(marginals.size())) {
        r.fail(field + ".dim", "dim does not match the number of marginals");
      }
      return JumpModel::product(std::move(marginals));
    }
    if (kind == "elliptical") {
      reject_extra({"kind", "dim", "base", "transform"});
      if (!spec.contains("base")) r.fail(field + ".base", "elliptical needs a base model");
      if (!spec.contains("transform")) r.fail(field + ".transform", "elliptical needs a transform");
      const JumpModel base = parse_model(r, spec["base"], field + ".base");
      return apply_linear_transform(base, square_matrix(r, spec["transform"], field + ".transform", base.dim()));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    r.fail(field, e.what());
  }
  r.fail(field + ".kind", "unknown model kind '" + kind + "'");
}

}  // namespace

JumpModel parse_model_spec(const json& spec, std::string_view text) {
  return parse_model(Reader(text), spec, "model");
}

ExperimentPlan parse_config_text(std::string_view text, std::string source_name) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("<syntax>", line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  const Reader r(text);
  r.object(root, "<root>");

  ExperimentPlan plan;
  plan.source_name = std::move(source_name);
  plan.config_hash = fnv1a64_hex(text);
  std::vector<std::string> violations;

  check_keys(root,
             {"experiment", "model", "offspring", "x_values", "samples", "seed", "radius", "q_c",
              "max_steps", "max_restarts", "count_pending_hits", "extinction_policy",
              "population_cap", "output", "frontier"},
             "", violations);

  if (root.contains("experiment")) {
    const std::string kind = r.string(root["experiment"], "experiment");
    if (kind == "fpt_sweep") plan.kind = ExperimentKind::FptSweep;
    else if (kind == "frontier_count") plan.kind = ExperimentKind::FrontierCount;
    else if (kind == "theory_only") plan.kind = ExperimentKind::TheoryOnly;
    else violations.push_back("experiment: unknown kind '" + kind + "'");
  }

  bool have_model = false;
  if (!root.contains("model")) {
    violations.push_back("model: required");
  } else {
    plan.model_spec = root["model"];
    plan.model = parse_model(r, root["model"], "model");
    plan.dim = plan.model.dim();
    have_model = true;
  }

  bool have_offspring = false;
  if (!root.contains("offspring")) {
    violations.push_back("offspring: required");
  } else {
    const json& o = r.object(root["offspring"], "offspring");
    check_keys(o, {"p0", "p1", "p3", "mode"}, "offspring.", violations);
    const double p0 = o.contains("p0") ? r.number(o["p0"], "offspring.p0") : 0.0;
    const double p3 = o.contains("p3") ? r.number(o["p3"], "offspring.p3") : 0.0;
    const double p1 = o.contains("p1") ? r.number(o["p1"], "offspring.p1") : 1.0 - p0 - p3;
    BranchingMode mode = BranchingMode::Classical;
    if (o.contains("mode")) {
      const std::string m = r.string(o["mode"], "offspring.mode");
      if (m == "delayed") mode = BranchingMode::Delayed;
      else if (m != "classical") violations.push_back("offspring.mode: expected 'classical' or 'delayed'");
    }
    try {
      plan.offspring = OffspringLaw(p0, p1, p3, mode);
      have_offspring = true;
    } catch (const InvalidLaw& e) {
      violations.push_back(std::string("offspring: ") + e.what());
    }
  }

  if (root.contains("x_values")) plan.x_values = r.numbers(root["x_values"], "x_values");
  if (root.contains("samples")) {
    const auto s = r.integer(root["samples"], "samples");
    if (s < 1) violations.push_back("samples: must be >= 1");
    else plan.samples = static_cast<std::size_t>(s);
  }
  if (root.contains("seed")) plan.master_seed = r.unsigned_integer(root["seed"], "seed");
  if (root.contains("radius")) {
    plan.radius = r.number(root["radius"], "radius");
    if (!(plan.radius > 0.0)) violations.push_back("radius: must be > 0");
  }
  if (root.contains("q_c")) {
    const json& q = root["q_c"];
    if (q.is_string() && (q.get<std::string>() == "inf" || q.get<std::string>() == "none")) {
      plan.q_c = kNoPurge;
    } else {
      plan.q_c = r.unsigned_integer(q, "q_c");
      if (plan.q_c < 2 || plan.q_c % 2 != 0) violations.push_back("q_c: must be an even integer >= 2 or \"inf\"");
    }
  }
  bool explicit_max_steps = false;
  if (root.contains("max_steps")) {
    plan.max_steps = r.integer(root["max_steps"], "max_steps");
    explicit_max_steps = true;
    if (plan.max_steps < 1) violations.push_back("max_steps: must be >= 1");
  }
  if (root.contains("max_restarts")) {
    const auto m = r.integer(root["max_restarts"], "max_restarts");
    if (m < 0 || m > static_cast<std::int64_t>(kMaxRestart)) violations.push_back("max_restarts: must lie in [0, 65535]");
    else plan.max_restarts = static_cast<int>(m);
  }
  if (root.contains("count_pending_hits")) {
    plan.count_pending_hits = r.boolean(root["count_pending_hits"], "count_pending_hits");
  }
  if (root.contains("extinction_policy")) {
    const std::string p = r.string(root["extinction_policy"], "extinction_policy");
    if (p == "restart") plan.extinction_policy = ExtinctionPolicy::Restart;
    else if (p == "discard") plan.extinction_policy = ExtinctionPolicy::Discard;
    else violations.push_back("extinction_policy: expected 'restart' or 'discard'");
  }
  if (root.contains("population_cap")) {
    plan.population_cap = r.unsigned_integer(root["population_cap"], "population_cap");
    if (plan.population_cap < 1) violations.push_back("population_cap: must be >= 1");
  }
  if (root.contains("output")) plan.output = r.string(root["output"], "output");

  if (root.contains("frontier")) {
    const json& f = r.object(root["frontier"], "frontier");
    check_keys(f, {"steps", "offsets", "method", "lattice_spacing", "exact_limit"}, "frontier.", violations);
    FrontierPlan fp;
    if (f.contains("steps")) fp.steps = static_cast<int>(r.integer(f["steps"], "frontier.steps"));
    if (f.contains("offsets")) fp.offsets = r.numbers(f["offsets"], "frontier.offsets");
    if (f.contains("method")) {
      const std::string m = r.string(f["method"], "frontier.method");
      if (m == "lattice") fp.method = FrontierMethod::Lattice;
      else if (m != "exact") violations.push_back("frontier.method: expected 'exact' or 'lattice'");
    }
    if (f.contains("lattice_spacing")) fp.lattice_spacing = r.number(f["lattice_spacing"], "frontier.lattice_spacing");
    if (f.contains("exact_limit")) fp.exact_limit = r.number(f["exact_limit"], "frontier.exact_limit");
    plan.frontier = fp;
  }

  // Kind-specific requirements.
  if (plan.kind == ExperimentKind::FptSweep) {
    if (!root.contains("x_values")) violations.push_back("x_values: required");
    if (!root.contains("samples")) violations.push_back("samples: required");
    if (!root.contains("seed")) violations.push_back("seed: required");
    if (plan.x_values.size() > kMaxXIndex + 1) violations.push_back("x_values: too many entries");
  }
  if (plan.kind != ExperimentKind::FrontierCount) {
    for (std::size_t i = 0; i < plan.x_values.size(); ++i) {
      if (!(plan.x_values[i] > 1.0)) {
        violations.push_back("x_values[" + std::to_string(i) + "]: must be > 1");
      }
      if (i > 0 && !(plan.x_values[i] > plan.x_values[i - 1])) {
        violations.push_back("x_values[" + std::to_string(i) + "]: must be strictly increasing");
      }
    }
  }
  if (plan.kind == ExperimentKind::FrontierCount) {
    if (!plan.frontier) {
      violations.push_back("frontier: required for frontier_count");
    } else {
      if (plan.frontier->steps < 4) violations.push_back("frontier.steps: must be >= 4");
      if (plan.frontier->offsets.empty()) violations.push_back("frontier.offsets: required");
      const double upper = std::sqrt(static_cast<double>(plan.frontier->steps));
      for (std::size_t i = 0; i < plan.frontier->offsets.size(); ++i) {
        const double x = plan.frontier->offsets[i];
        if (!(x >= 2.0 && x <= upper)) {
          violations.push_back("frontier.offsets[" + std::to_string(i) + "]: must lie in [2, sqrt(steps)]");
        }
      }
    }
    if (!root.contains("samples")) violations.push_back("samples: required");
    if (!root.contains("seed")) violations.push_back("seed: required");
    if (have_model && plan.dim != 1) violations.push_back("model: frontier_count needs a one-dimensional model");
    if (have_offspring && plan.offspring.mode() != BranchingMode::Classical) {
      violations.push_back("offspring.mode: frontier_count needs classical branching");
    }
  }

  if (plan.kind == ExperimentKind::FptSweep && have_model && have_offspring && !explicit_max_steps &&
      !plan.x_values.empty()) {
    // default: 10 * ceil(max x / c1_hat)
    try {
      const double c1_hat =
          solve_c1_hat(RateFunction(plan.model, RateMode::Full), plan.offspring.rho()).c1_hat;
      plan.max_steps = 10 * static_cast<std::int64_t>(std::ceil(plan.x_values.back() / c1_hat));
    } catch (const Error& e) {
      violations.push_back(std::string("max_steps: required because c1_hat is unavailable (") +
                           e.what() + ")");
    }
  }

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return plan;
}

ExperimentPlan parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("<file>", 0, "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

}  // namespace brwfpt
