#pragma once

#include <stdexcept>
#include <string>

namespace ptme {

// Every rejected input maps to exactly one of these kinds; callers that need
// to branch (e.g. the CLI exit-code mapping) switch on kind() instead of
// parsing messages.
enum class ErrorKind {
  // npy tensors
  BadMagic,
  UnsupportedDtype,
  FortranOrder,
  NonFinite,
  TruncatedPayload,
  BadHeader,
  // chain layout documents
  LengthMismatch,
  UnknownBinderLabel,
  UnknownTargetLabel,
  EmptyTargets,
  EmptyChain,
  DuplicateChainLabel,
  BinderInTargets,
  BadDocument,
  // screening tables
  DuplicateId,
  BadLabel,
  MissingSource,
  AmbiguousSource,
  BadRow,
  // kernels and metrics
  NonMonotoneBins,
  NegativeBinCenter,
  BinCountMismatch,
  ChainLengthMismatch,
  IndexOutOfRange,
  OutOfRangeConfidence,
  MissingField,
  // gradient checks
  TooLargeForOracle,
  ShapeMismatchAcrossSteps,
  // ranking metrics
  NoPositives,
  NoNegatives,
  KTooLarge,
  // design loop
  PredictorFailure,
  NonPositiveCutoff,
  // catch-alls
  InvalidArgument,
  IoFailure,
  Internal,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const { return kind_; }
  const char* kind_name() const { return error_kind_name(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace ptme
