#include "brwfpt/errors.hpp"

#include <sstream>

namespace brwfpt {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::ostringstream os;
  os << v.size() << " validation error(s)";
  for (const auto& s : v) os << "\n  - " << s;
  return os.str();
}

}  // namespace

NoConvergence::NoConvergence(int iterations, double residual)
    : Error("NoConvergence", "Newton iteration did not converge after " +
                                 std::to_string(iterations) + " iterations (residual " +
                                 std::to_string(residual) + ")"),
      iterations_(iterations),
      residual_(residual) {}

SurvivalConditioningFailed::SurvivalConditioningFailed(int attempts, std::uint64_t last_seed)
    : Error("SurvivalConditioningFailed",
            "all " + std::to_string(attempts) + " runs went extinct (last seed " +
                std::to_string(last_seed) + ")"),
      attempts_(attempts),
      last_seed_(last_seed) {}

PopulationOverflow::PopulationOverflow(std::size_t cap)
    : Error("PopulationOverflow",
            "population exceeded the hard cap of " + std::to_string(cap) + " particles"),
      cap_(cap) {}

SingularDesign::SingularDesign(double condition_number)
    : Error("SingularDesign", "fit design matrix is singular (condition number " +
                                  std::to_string(condition_number) + ")"),
      condition_(condition_number) {}

ParseError::ParseError(std::string field, std::size_t line, const std::string& what)
    : Error("ParseError", "line " + std::to_string(line) + ", field '" + field + "': " + what),
      field_(std::move(field)),
      line_(line) {}

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error("ValidationError", join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace brwfpt
