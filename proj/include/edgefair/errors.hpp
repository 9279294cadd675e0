#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace edgefair {

// Base class for all toolkit errors. code() is stable and machine readable;
// the CLI maps it to an exit status and structured stderr output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define EDGEFAIR_ERROR(Name)                                      \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& message)                     \
        : Error(#Name, message) {}                                \
  }

EDGEFAIR_ERROR(CycleDetected);
EDGEFAIR_ERROR(CptRowNotNormalized);
EDGEFAIR_ERROR(DomainMismatch);
EDGEFAIR_ERROR(UnknownVariableReference);
EDGEFAIR_ERROR(UnknownVariable);
EDGEFAIR_ERROR(PartialAssignment);
EDGEFAIR_ERROR(OverlappingDoAndTarget);
EDGEFAIR_ERROR(MismatchedSensitiveSets);
EDGEFAIR_ERROR(NotAParent);
EDGEFAIR_ERROR(RootNode);
EDGEFAIR_ERROR(UnknownParent);
EDGEFAIR_ERROR(NotUnfairEdge);
EDGEFAIR_ERROR(NotSensitiveSource);
EDGEFAIR_ERROR(IncompleteSensitiveAssignment);
EDGEFAIR_ERROR(MissingMu);
EDGEFAIR_ERROR(BoundViolation);
EDGEFAIR_ERROR(IncompleteSpec);
EDGEFAIR_ERROR(MarginalityViolated);
EDGEFAIR_ERROR(InvalidGridPoint);
EDGEFAIR_ERROR(EmptyDataset);
EDGEFAIR_ERROR(ParseError);
EDGEFAIR_ERROR(IoError);

#undef EDGEFAIR_ERROR

}  // namespace edgefair
