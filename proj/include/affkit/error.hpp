#pragma once

#include <stdexcept>
#include <string>

namespace affkit {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateConfiguration,
  kSingularSystem,
  kNoConsensus,
  kPointAtInfinity,
  kEmptySet,
  kEmptyMask,
  kEmptyIntersection,
  kNoPrecontactFrame,
  kCorrespondenceFailure,
  kDisjointnessViolation,
  kShapeMismatch,
  kMissingDepth,
  kEmptyGroundTruth,
  kManifestError,
  kNonFiniteLoss,
  kVocabularyMismatch,
  kNoDetections,
  kNoCapableObject,
  kNoValidGrasp,
  kIoError,
  kFormatError,
};

const char* to_string(ErrorCode code);

// Domain error carrying a machine-checkable code. `stage` is filled in by
// orchestration layers that want to report where a failure originated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }
  const std::string& message() const { return message_; }

  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string message_;
  std::string stage_;
};

}  // namespace affkit
