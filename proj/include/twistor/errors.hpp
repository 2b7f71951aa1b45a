#pragma once

#include <stdexcept>
#include <string>

namespace twistor {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define TWISTOR_ERROR(NAME)                                          \
  struct NAME : Error {                                              \
    explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
  }

TWISTOR_ERROR(NonSymmetric);
TWISTOR_ERROR(AmbientMismatch);
TWISTOR_ERROR(DimensionMismatch);
TWISTOR_ERROR(InvalidStructure);
TWISTOR_ERROR(NotTangent);
TWISTOR_ERROR(EvaluationFailure);
TWISTOR_ERROR(DegenerateCluster);
TWISTOR_ERROR(InfeasibleSpec);
TWISTOR_ERROR(BlockFailure);
TWISTOR_ERROR(HypothesisViolated);
TWISTOR_ERROR(RankJump);
TWISTOR_ERROR(SubspaceMismatch);
TWISTOR_ERROR(NotInDomain);
TWISTOR_ERROR(UnknownCase);
TWISTOR_ERROR(NumericalFailure);

#undef TWISTOR_ERROR

}  // namespace twistor
