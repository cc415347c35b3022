#include "vpr/error.hpp"

namespace vpr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::TargetCountTooLarge: return "TargetCountTooLarge";
    case ErrorCode::DegenerateImage: return "DegenerateImage";
    case ErrorCode::TooFewDescriptors: return "TooFewDescriptors";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::InconsistentRankings: return "InconsistentRankings";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::UnknownLibraryId: return "UnknownLibraryId";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RankOutOfBounds: return "RankOutOfBounds";
    case ErrorCode::RelevantNotInDatabase: return "RelevantNotInDatabase";
    case ErrorCode::MissingDataset: return "MissingDataset";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace vpr
