// Copyright 2026 The versechain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VERSECHAIN_ERROR_HPP
#define VERSECHAIN_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace versechain {

enum class ErrorCode {
  kDuplicateSurface,
  kEmptySurface,
  kUntokenizable,
  kBadTokenId,
  kBadPosition,
  kProviderFailure,
  kInfiniteEnergy,
  kInfeasible,
  kConflictingPins,
  kEmptyMask,
  kParse,
  kUnknownToken,
  kNoFreePositions,
  kTooLarge,
  kLengthMismatch,
  kNoSession,
  kBadTransition,
  kLengthChanged,
  kInvalidArgument,
  kIo,
};

inline constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateSurface: return "E_DUPLICATE_SURFACE";
    case ErrorCode::kEmptySurface: return "E_EMPTY_SURFACE";
    case ErrorCode::kUntokenizable: return "E_UNTOKENIZABLE";
    case ErrorCode::kBadTokenId: return "E_BAD_TOKEN_ID";
    case ErrorCode::kBadPosition: return "E_BAD_POSITION";
    case ErrorCode::kProviderFailure: return "E_PROVIDER_FAILURE";
    case ErrorCode::kInfiniteEnergy: return "E_INFINITE_ENERGY";
    case ErrorCode::kInfeasible: return "E_INFEASIBLE";
    case ErrorCode::kConflictingPins: return "E_CONFLICTING_PINS";
    case ErrorCode::kEmptyMask: return "E_EMPTY_MASK";
    case ErrorCode::kParse: return "E_PARSE";
    case ErrorCode::kUnknownToken: return "E_UNKNOWN_TOKEN";
    case ErrorCode::kNoFreePositions: return "E_NO_FREE_POSITIONS";
    case ErrorCode::kTooLarge: return "E_TOO_LARGE";
    case ErrorCode::kLengthMismatch: return "E_LENGTH_MISMATCH";
    case ErrorCode::kNoSession: return "E_NO_SESSION";
    case ErrorCode::kBadTransition: return "E_BAD_TRANSITION";
    case ErrorCode::kLengthChanged: return "E_LENGTH_CHANGED";
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

/// Every failure in the library is reported as an Error carrying a stable
/// code. Positional errors (infeasible position, parse line) also carry the
/// offending index so callers can render "infeasible at position p".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> where = std::nullopt)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        where_(where) {}

  ErrorCode code() const noexcept { return code_; }

  /// Position for E_INFEASIBLE / E_BAD_POSITION, 1-based line for E_PARSE.
  std::optional<std::size_t> where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> where_;
};

}  // namespace versechain

#endif  // VERSECHAIN_ERROR_HPP
