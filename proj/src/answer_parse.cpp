#include "vidreason/answer_parse.hpp"

#include <cctype>
#include <regex>

#include "text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<char> first_allowed_match(std::string_view text, const std::regex& pattern,
                                        const std::set<char>& allowed) {
  using Iter = std::regex_iterator<std::string_view::const_iterator>;
  for (Iter it(text.begin(), text.end(), pattern), end; it != end; ++it) {
    const char letter = (*it)[1].str()[0];
    if (allowed.contains(letter)) return letter;
  }
  return std::nullopt;
}

}  // namespace

std::optional<char> parse_letter(std::string_view text, const std::set<char>& allowed) {
  auto whole = detail::trim(text);
  if (!whole.empty() && whole.back() == '.') whole.remove_suffix(1);
  if (whole.size() == 1 && allowed.contains(whole[0])) return whole[0];

  static const std::regex answer_phrase(R"([Aa][Nn][Ss][Ww][Ee][Rr](?:\s+[Ii][Ss])?\s*:?\s*\(?([A-Z])\)?(?![A-Za-z0-9]))");
  static const std::regex parenthesised(R"(\(([A-Z])\))");
  const auto tail = text.size() > kLetterTailWindow ? text.substr(text.size() - kLetterTailWindow) : text;
  if (auto letter = first_allowed_match(tail, answer_phrase, allowed)) return letter;
  if (auto letter = first_allowed_match(tail, parenthesised, allowed)) return letter;

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!allowed.contains(c)) continue;
    const bool left_ok = i == 0 || !is_alnum(text[i - 1]);
    const bool right_ok = i + 1 == text.size() || (!is_alnum(text[i + 1]) && text[i + 1] != '\'');
    if (left_ok && right_ok) return c;
  }
  return std::nullopt;
}

namespace {

struct RawNumber {
  std::string_view token;
  bool negative = false;
  bool fractional = false;
};

class IntervalListParser {
 public:
  explicit IntervalListParser(std::string_view text) : text_(text) {}

  std::vector<std::pair<RawNumber, RawNumber>> parse() {
    std::vector<std::pair<RawNumber, RawNumber>> out;
    skip_ws();
    expect('[');
    skip_ws();
    if (peek() == ']') {
      ++pos_;
    } else {
      while (true) {
        out.push_back(interval());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          continue;
        }
        expect(']');
        break;
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return out;
  }

 private:
  std::pair<RawNumber, RawNumber> interval() {
    expect('[');
    skip_ws();
    RawNumber start = number();
    skip_ws();
    expect(',');
    skip_ws();
    RawNumber end = number();
    skip_ws();
    expect(']');
    return {start, end};
  }

  RawNumber number() {
    RawNumber n;
    const std::size_t begin = pos_;
    if (peek() == '-') {
      n.negative = true;
      ++pos_;
    }
    if (digits() == 0) fail("expected a number");
    if (peek() == '.') {
      ++pos_;
      n.fractional = true;
      if (digits() == 0) fail("expected digits after '.'");
    }
    if (peek() == 'e' || peek() == 'E') {
      ++pos_;
      n.fractional = true;
      if (peek() == '-' || peek() == '+') ++pos_;
      if (digits() == 0) fail("expected exponent digits");
    }
    n.token = text_.substr(begin, pos_ - begin);
    return n;
  }

  std::size_t digits() {
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    return pos_ - begin;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && detail::is_space(text_[pos_])) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ParseFailure, what + " at offset " + std::to_string(pos_));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::int64_t to_bound(const RawNumber& n) {
  if (n.negative || n.fractional) {
    throw Error(ErrorKind::NonIntegerBound, "'" + std::string(n.token) + "' is not a non-negative integer");
  }
  auto digits = n.token;
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  if (digits.size() > 15) throw Error(ErrorKind::ParseFailure, "bound '" + std::string(n.token) + "' out of range");
  return std::stoll(std::string(digits));
}

}  // namespace

IntervalPrediction parse_intervals(std::string_view text) {
  const auto raw = IntervalListParser(text).parse();
  if (raw.empty()) throw Error(ErrorKind::EmptyPrediction, "no intervals");
  if (raw.size() > kMaxPredictedIntervals) {
    throw Error(ErrorKind::TooManyIntervals, std::to_string(raw.size()) + " intervals, at most " +
                                                 std::to_string(kMaxPredictedIntervals) + " allowed");
  }
  IntervalPrediction out;
  for (const auto& [s, e] : raw) out.intervals.push_back({to_bound(s), to_bound(e)});
  for (const auto& iv : out.intervals) {
    if (iv.start >= iv.end) {
      throw Error(ErrorKind::InvertedInterval,
                  "[" + std::to_string(iv.start) + ", " + std::to_string(iv.end) + "] has start >= end");
    }
  }
  return out;
}

std::string format_intervals(const IntervalPrediction& prediction) {
  std::string out = "[";
  for (std::size_t i = 0; i < prediction.intervals.size(); ++i) {
    if (i) out += ", ";
    out += "[" + std::to_string(prediction.intervals[i].start) + ", " + std::to_string(prediction.intervals[i].end) + "]";
  }
  return out + "]";
}

std::string clean_open_answer(std::string_view text) {
  auto is_trim = [](char c) {
    return detail::is_space(c) || std::ispunct(static_cast<unsigned char>(c)) != 0;
  };
  while (!text.empty() && is_trim(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_trim(text.back())) text.remove_suffix(1);
  return std::string(text);
}

}  // namespace vidreason
