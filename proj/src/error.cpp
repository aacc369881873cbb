#include "affkit/error.hpp"

#include <utility>

namespace affkit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kPointAtInfinity: return "PointAtInfinity";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kNoPrecontactFrame: return "NoPrecontactFrame";
    case ErrorCode::kCorrespondenceFailure: return "CorrespondenceFailure";
    case ErrorCode::kDisjointnessViolation: return "DisjointnessViolation";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMissingDepth: return "MissingDepth";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kManifestError: return "ManifestError";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kVocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::kNoDetections: return "NoDetections";
    case ErrorCode::kNoCapableObject: return "NoCapableObject";
    case ErrorCode::kNoValidGrasp: return "NoValidGrasp";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& message, const std::string& stage) {
  std::string out = stage.empty() ? std::string{} : "[" + stage + "] ";
  out += to_string(code);
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      message_(message),
      stage_(std::move(stage)) {}

Error Error::with_stage(std::string stage) const { return Error(code_, message_, std::move(stage)); }

}  // namespace affkit
