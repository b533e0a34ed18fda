#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace brwfpt {

// All library failures derive from Error; code() is the stable machine-readable
// tag written into CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class QuadratureFailure : public Error {
 public:
  explicit QuadratureFailure(const std::string& what) : Error("QuadratureFailure", what) {}
};

class SingularTransform : public Error {
 public:
  explicit SingularTransform(const std::string& what) : Error("SingularTransform", what) {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual);
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class RangeExceeded : public Error {
 public:
  explicit RangeExceeded(const std::string& what) : Error("RangeExceeded", what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("DomainError", what) {}
};

class InvalidLaw : public Error {
 public:
  explicit InvalidLaw(const std::string& what) : Error("InvalidLaw", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

class SurvivalConditioningFailed : public Error {
 public:
  SurvivalConditioningFailed(int attempts, std::uint64_t last_seed);
  int attempts() const noexcept { return attempts_; }
  std::uint64_t last_seed() const noexcept { return last_seed_; }

 private:
  int attempts_;
  std::uint64_t last_seed_;
};

class PopulationOverflow : public Error {
 public:
  explicit PopulationOverflow(std::size_t cap);
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

class InsufficientSamples : public Error {
 public:
  explicit InsufficientSamples(const std::string& what) : Error("InsufficientSamples", what) {}
};

class SingularDesign : public Error {
 public:
  explicit SingularDesign(double condition_number);
  double condition_number() const noexcept { return condition_; }

 private:
  double condition_;
};

class ParseError : public Error {
 public:
  ParseError(std::string field, std::size_t line, const std::string& what);
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace brwfpt
