#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cjmap {

// Every failure the engine can report. Names are stable: they are printed by
// the CLI and mirrored one-to-one by the C API status codes.
enum class ErrorCode {
  kNegativeValue,
  kDuplicateCoinId,
  kOutputsExceedInputs,
  kEmptySide,
  kSignatureMismatch,
  kUnknownDesign,
  kMissingFeerate,
  kInvalidPolicy,
  kValueUnderflow,
  kOverlappingGroups,
  kDanglingId,
  kSubmappingExplosion,
  kInstanceTooLarge,
  kZeroMass,
  kUnknownId,
  kUnknownSignature,
  kUnknownTx,
  kUnknownOutput,
  kInvalidGraph,
  kDanglingLink,
  kValueMismatch,
  kInfeasibleParams,
  kDegenerateData,
  kParseError,
  kIoError,
  kInvalidArgument,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cjmap
