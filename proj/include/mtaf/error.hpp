#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtaf {

enum class ErrorCode {
  DimensionMismatch,
  NonBinaryCoding,
  RankDeficientCovariates,
  AllSnpsConstant,
  MissingValue,
  ConstantTrait,
  InsufficientSamples,
  IrlsNonConvergence,
  SeparationDetected,
  DegenerateGenotype,
  EmptyMatrix,
  NonPositiveEntry,
  ShapeMismatch,
  PermutationCountTooSmall,
  InvalidArgument,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI, the Python bindings) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mtaf
