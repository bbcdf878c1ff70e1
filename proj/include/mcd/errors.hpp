#ifndef MCD_ERRORS_HPP
#define MCD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcd {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteValue,
  IndexOutOfRange,
  OverlappingPartition,
  EmptyData,
  EmptyCell,
  ZeroDenominator,
  ZeroConditioningDensity,
  AllDegenerate,
  SupportViolation,
  SeparationDetected,
  SingularDesign,
  DegenerateDensity,
  Domain,
  OptimizerDiverged,
  ObjectiveNonFinite,
  TooManyFailures,
  IncompatibleScheme,
  Io,
  SchemaMismatch,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mcd

#endif
