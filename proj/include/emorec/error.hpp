// emorec/error.hpp

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emorec {

enum class ErrorCode {
  // audio
  IoError,
  MalformedContainer,
  UnsupportedEncoding,
  EmptyAudio,
  ClipTooShort,
  // features
  InvalidConfig,
  DegenerateBand,
  SilentFrame,
  // hmm
  DimensionMismatch,
  EmptyObservation,
  InsufficientData,
  NoData,
  // classifier
  MissingClass,
  EmptyTestSet,
  EmptyRow,
  EmptyMatrix,
  // corpus / files
  SchemaMismatch,
  BadLabel,
  BadGender,
  BadSplit,
  DuplicatePath,
  IntegrityError,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedContainer: return "MalformedContainer";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::ClipTooShort: return "ClipTooShort";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateBand: return "DegenerateBand";
    case ErrorCode::SilentFrame: return "SilentFrame";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyObservation: return "EmptyObservation";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::EmptyRow: return "EmptyRow";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::BadGender: return "BadGender";
    case ErrorCode::BadSplit: return "BadSplit";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace emorec
