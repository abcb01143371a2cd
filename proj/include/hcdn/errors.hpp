#pragma once

#include <stdexcept>
#include <string>

namespace hcdn {

enum class ErrorCode {
  MissingFile,
  DecodeFailure,
  DimensionMismatch,
  EmptyManifest,
  BadRatios,
  EmptySet,
  InsufficientMatches,
  DegenerateConfiguration,
  CropTooLarge,
  ShapeMismatch,
  NonFiniteActivation,
  NonBinaryTarget,
  EmptyConfusion,
  ConfigMismatch,
  EmptySplit,
  DataLoadFailure,
  NonFiniteLoss,
  UnreadableSource,
  ModelLoadFailure,
  SinkUnavailable,
  ParseError,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::CropTooLarge: return "CropTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonBinaryTarget: return "NonBinaryTarget";
    case ErrorCode::EmptyConfusion: return "EmptyConfusion";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::DataLoadFailure: return "DataLoadFailure";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UnreadableSource: return "UnreadableSource";
    case ErrorCode::ModelLoadFailure: return "ModelLoadFailure";
    case ErrorCode::SinkUnavailable: return "SinkUnavailable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hcdn
