#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpr {

enum class ErrorCode {
  UnsupportedFormat,
  CorruptFile,
  ImageTooSmall,
  TargetCountTooLarge,
  DegenerateImage,
  TooFewDescriptors,
  NoCandidates,
  DimensionMismatch,
  EmptyScene,
  EmptyLibrary,
  InconsistentRankings,
  EmptyFeatureSet,
  UnknownLibraryId,
  EmptyInput,
  RankOutOfBounds,
  RelevantNotInDatabase,
  MissingDataset,
  MissingGroundTruth,
  InvalidParams,
  IoError,
  ParseError,
  UsageError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can react without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vpr
