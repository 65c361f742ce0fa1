#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vidreason {

enum class ErrorKind {
  // manifest ingestion
  MalformedRecord,
  DuplicateVideoId,
  InvariantViolation,
  // clip planning and rendering
  NonPositiveInput,
  NegativeTime,
  // token budgeting
  VocabularyLoadFailure,
  CaptionSourceFailure,
  InvalidRate,
  // model gateway
  BackendUnavailable,
  MalformedResponse,
  Timeout,
  ContextLengthExceeded,
  RoleMismatch,
  UnknownMockProfile,
  // prompts and output parsing
  MissingOptions,
  IncompatibleTemplate,
  ParseFailure,
  TooManyIntervals,
  EmptyPrediction,
  NonIntegerBound,
  InvertedInterval,
  // evaluation
  EmptyInput,
  DegenerateBaseline,
  UnknownCategoryLabel,
  // orchestration
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers can branch
/// on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vidreason
