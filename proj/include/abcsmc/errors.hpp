#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace abcsmc {

/// Base class for every error raised by the sampler and its models.
///
/// A step index can be attached after the fact (the engine does this when an
/// error escapes a step) without changing the dynamic type of the exception.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message), message_(message) {}

  [[nodiscard]] const char* what() const noexcept override { return formatted_.empty() ? message_.c_str() : formatted_.c_str(); }

  [[nodiscard]] std::optional<int> step() const noexcept { return step_; }

  void attach_step(int step) {
    step_ = step;
    formatted_ = "step " + std::to_string(step) + ": " + message_;
  }

 private:
  std::string message_;
  std::string formatted_;
  std::optional<int> step_;
};

#define ABCSMC_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(message) {}     \
  }

ABCSMC_DEFINE_ERROR(AllZeroWeights);
ABCSMC_DEFINE_ERROR(NonFiniteWeight);
ABCSMC_DEFINE_ERROR(DimensionMismatch);
ABCSMC_DEFINE_ERROR(UnsupportedKind);
ABCSMC_DEFINE_ERROR(DegeneratePopulation);
ABCSMC_DEFINE_ERROR(AttemptCapExceeded);
ABCSMC_DEFINE_ERROR(NonFiniteState);
ABCSMC_DEFINE_ERROR(LengthMismatch);
ABCSMC_DEFINE_ERROR(SchemaMismatch);
ABCSMC_DEFINE_ERROR(InvalidArgument);

#undef ABCSMC_DEFINE_ERROR

/// Configuration errors carry the location they were detected at.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, std::string field)
      : Error(format(message, line, field)), line_(line), field_(std::move(field)) {}

  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& message, int line, const std::string& field) {
    std::string out = "parse error";
    if (line >= 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " (field '" + field + "')";
    return out + ": " + message;
  }

  int line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& invariant, const std::string& detail)
      : Error("validation error: " + invariant + ": " + detail), invariant_(invariant) {}

  [[nodiscard]] const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace abcsmc
