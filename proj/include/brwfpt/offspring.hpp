#pragma once

#include <string>

namespace brwfpt {

enum class BranchingMode { Classical, Delayed };

// Offspring law supported on {0, 1, 3}.
//
// Classical: a particle is replaced by 0, 1 or 3 particles with probabilities
// p0, p1, p3. Delayed: a ternary event is split into a binary type-I event now
// and a binary type-II event one step later (see step_delayed).
class OffspringLaw {
 public:
  // Throws InvalidLaw if a probability is outside [0, 1] or they do not sum
  // to 1 within 1e-12. Subcritical laws are allowed here; callers that need
  // growth check is_supercritical().
  OffspringLaw(double p0, double p1, double p3, BranchingMode mode);

  static OffspringLaw classical(double p0, double p1, double p3) {
    return {p0, p1, p3, BranchingMode::Classical};
  }
  static OffspringLaw delayed(double p0, double p1, double p3) {
    return {p0, p1, p3, BranchingMode::Delayed};
  }

  double p0() const noexcept { return p0_; }
  double p1() const noexcept { return p1_; }
  double p3() const noexcept { return p3_; }
  BranchingMode mode() const noexcept { return mode_; }

  // Mean of the ternary law, p1 + 3 p3.
  double mean() const noexcept { return p1_ + 3.0 * p3_; }
  // Effective per-step growth rate: mean() when classical, delayed_rho() when delayed.
  double rho() const;
  bool is_supercritical() const { return rho() > 1.0; }

  std::string describe() const;

 private:
  double p0_;
  double p1_;
  double p3_;
  BranchingMode mode_;
};

}  // namespace brwfpt
