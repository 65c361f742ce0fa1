#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vidreason {

inline constexpr std::size_t kMaxPredictedIntervals = 5;

struct IntegerInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;
  friend bool operator==(const IntegerInterval&, const IntegerInterval&) = default;
};

/// Grounded-QA answer: one to five integer [start, end) spans, start < end.
struct IntervalPrediction {
  std::vector<IntegerInterval> intervals;
  friend bool operator==(const IntervalPrediction&, const IntervalPrediction&) = default;
};

/// Extracts a choice letter from model output. Rules, in order:
///   1. the whole trimmed text is one allowed letter (a trailing '.' is tolerated);
///   2. within the tail of the text, the first "answer is X" / "answer: X"
///      phrase, else the first parenthesised "(X)";
///   3. the first standalone allowed capital letter anywhere.
/// Returns nullopt (an abstention) when nothing matches.
std::optional<char> parse_letter(std::string_view text, const std::set<char>& allowed);

/// Number of trailing characters rule 2 of parse_letter inspects.
inline constexpr std::size_t kLetterTailWindow = 300;

/// Strict parse of "[[s, e], ...]" with non-negative integer bounds.
/// Whitespace is allowed between tokens; nothing else is. Errors:
/// ParseFailure, EmptyPrediction, TooManyIntervals, NonIntegerBound
/// (fractions, exponents or negative values), InvertedInterval (start >= end).
IntervalPrediction parse_intervals(std::string_view text);

/// "[[5, 7], [9, 12]]"
std::string format_intervals(const IntervalPrediction& prediction);

/// Whitespace- and punctuation-trimmed model answer for open-ended scoring.
std::string clean_open_answer(std::string_view text);

}  // namespace vidreason
