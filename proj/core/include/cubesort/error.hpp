#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cubesort {

enum class ErrorCode {
  // imaging
  BadMagic,
  TruncatedData,
  UnsupportedMaxval,
  TooSmall,
  OverlapError,
  InvalidScene,
  // colordetect / detector geometry
  DegenerateBox,
  EmptyRegion,
  // tensornet
  ShapeMismatch,
  OddDimension,
  LabelOutOfRange,
  BadWeights,
  // detector / datakit
  EmptyDataset,
  InvalidConfig,
  MalformedXml,
  MissingElement,
  InvalidBox,
  BadHeader,
  BadRow,
  // eval
  UnknownCategory,
  EmptyMatrix,
  NoPositivePredictions,
  NoActualPositives,
  // armsim
  BadSync,
  BadChecksum,
  BadChannel,
  PairConflict,
  OutOfReach,
  PayloadTooHeavy,
  YawUnreachable,
  // general
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Structured error thrown by every module. `code()` identifies the failure
/// class; `what()` carries a one-line human readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cubesort
