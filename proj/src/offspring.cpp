#include "brwfpt/offspring.hpp"

#include <cmath>
#include <sstream>

#include "brwfpt/asymptotics.hpp"
#include "brwfpt/errors.hpp"

namespace brwfpt {

OffspringLaw::OffspringLaw(double p0, double p1, double p3, BranchingMode mode)
    : p0_(p0), p1_(p1), p3_(p3), mode_(mode) {
  for (double p : {p0, p1, p3}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidLaw("offspring probabilities must lie in [0, 1]");
  }
  if (std::abs(p0 + p1 + p3 - 1.0) > 1e-12) {
    throw InvalidLaw("offspring probabilities sum to " + std::to_string(p0 + p1 + p3) +
                     ", expected 1");
  }
}

double OffspringLaw::rho() const {
  return mode_ == BranchingMode::Classical ? mean() : delayed_rho(p0_, p1_, p3_);
}

std::string OffspringLaw::describe() const {
  std::ostringstream os;
  os << (mode_ == BranchingMode::Classical ? "classical" : "delayed") << "(p0=" << p0_
     << ", p1=" << p1_ << ", p3=" << p3_ << ")";
  return os.str();
}

}  // namespace brwfpt
