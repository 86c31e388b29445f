#include "ptme/errors.hpp"

namespace ptme {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorKind::FortranOrder: return "FortranOrder";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::BadHeader: return "BadHeader";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UnknownBinderLabel: return "UnknownBinderLabel";
    case ErrorKind::UnknownTargetLabel: return "UnknownTargetLabel";
    case ErrorKind::EmptyTargets: return "EmptyTargets";
    case ErrorKind::EmptyChain: return "EmptyChain";
    case ErrorKind::DuplicateChainLabel: return "DuplicateChainLabel";
    case ErrorKind::BinderInTargets: return "BinderInTargets";
    case ErrorKind::BadDocument: return "BadDocument";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::MissingSource: return "MissingSource";
    case ErrorKind::AmbiguousSource: return "AmbiguousSource";
    case ErrorKind::BadRow: return "BadRow";
    case ErrorKind::NonMonotoneBins: return "NonMonotoneBins";
    case ErrorKind::NegativeBinCenter: return "NegativeBinCenter";
    case ErrorKind::BinCountMismatch: return "BinCountMismatch";
    case ErrorKind::ChainLengthMismatch: return "ChainLengthMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::OutOfRangeConfidence: return "OutOfRangeConfidence";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::TooLargeForOracle: return "TooLargeForOracle";
    case ErrorKind::ShapeMismatchAcrossSteps: return "ShapeMismatchAcrossSteps";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::NoNegatives: return "NoNegatives";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::PredictorFailure: return "PredictorFailure";
    case ErrorKind::NonPositiveCutoff: return "NonPositiveCutoff";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ptme
