#include "vidreason/error.hpp"

namespace vidreason {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::DuplicateVideoId: return "DuplicateVideoId";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::NonPositiveInput: return "NonPositiveInput";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::VocabularyLoadFailure: return "VocabularyLoadFailure";
    case ErrorKind::CaptionSourceFailure: return "CaptionSourceFailure";
    case ErrorKind::InvalidRate: return "InvalidRate";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::ContextLengthExceeded: return "ContextLengthExceeded";
    case ErrorKind::RoleMismatch: return "RoleMismatch";
    case ErrorKind::UnknownMockProfile: return "UnknownMockProfile";
    case ErrorKind::MissingOptions: return "MissingOptions";
    case ErrorKind::IncompatibleTemplate: return "IncompatibleTemplate";
    case ErrorKind::ParseFailure: return "ParseFailure";
    case ErrorKind::TooManyIntervals: return "TooManyIntervals";
    case ErrorKind::EmptyPrediction: return "EmptyPrediction";
    case ErrorKind::NonIntegerBound: return "NonIntegerBound";
    case ErrorKind::InvertedInterval: return "InvertedInterval";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorKind::UnknownCategoryLabel: return "UnknownCategoryLabel";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vidreason
