#include "cubesort/error.hpp"

namespace cubesort {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::MissingElement: return "MissingElement";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadRow: return "BadRow";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NoPositivePredictions: return "NoPositivePredictions";
    case ErrorCode::NoActualPositives: return "NoActualPositives";
    case ErrorCode::BadSync: return "BadSync";
    case ErrorCode::BadChecksum: return "BadChecksum";
    case ErrorCode::BadChannel: return "BadChannel";
    case ErrorCode::PairConflict: return "PairConflict";
    case ErrorCode::OutOfReach: return "OutOfReach";
    case ErrorCode::PayloadTooHeavy: return "PayloadTooHeavy";
    case ErrorCode::YawUnreachable: return "YawUnreachable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cubesort
