#include "vidreason/token_counter.hpp"

#include <array>
#include <climits>
#include <fstream>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

std::size_t count_code_points(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Printable stand-ins for raw bytes, as used by GPT-2 style merges files
// (space becomes U+0120 "Ġ", newline U+010A "Ċ").
std::array<std::string, 256> make_byte_symbols() {
  std::array<bool, 256> direct{};
  for (int b = '!'; b <= '~'; ++b) direct[b] = true;
  for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
  for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
  std::array<std::string, 256> out;
  char32_t next = 256;
  for (int b = 0; b < 256; ++b) {
    append_utf8(out[b], direct[b] ? static_cast<char32_t>(b) : next++);
  }
  return out;
}

enum class CharClass { Letter, Digit, Space, Other };

CharClass classify(unsigned char c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80) return CharClass::Letter;
  if (c >= '0' && c <= '9') return CharClass::Digit;
  if (detail::is_space(static_cast<char>(c))) return CharClass::Space;
  return CharClass::Other;
}

// ASCII approximation of the GPT-2 pre-tokenization pattern.
std::vector<std::string_view> pre_tokenize(std::string_view text) {
  static constexpr std::array<std::string_view, 7> kContractions = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto run_end = [&](std::size_t from, CharClass cls) {
    while (from < n && classify(text[from]) == cls) ++from;
    return from;
  };
  while (i < n) {
    bool matched = false;
    if (text[i] == '\'') {
      for (auto c : kContractions) {
        if (text.substr(i, c.size()) == c) {
          chunks.push_back(text.substr(i, c.size()));
          i += c.size();
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;
    const CharClass cls = classify(text[i]);
    if (text[i] == ' ' && i + 1 < n && classify(text[i + 1]) != CharClass::Space) {
      const std::size_t end = run_end(i + 1, classify(text[i + 1]));
      chunks.push_back(text.substr(i, end - i));
      i = end;
    } else if (cls == CharClass::Space) {
      std::size_t end = run_end(i, CharClass::Space);
      // Leave one space to prefix the following word.
      if (end < n && end - i > 1 && text[end - 1] == ' ') --end;
      chunks.push_back(text.substr(i, end - i));
      i = end;
    } else {
      const std::size_t end = run_end(i, cls);
      chunks.push_back(text.substr(i, end - i));
      i = end;
    }
  }
  return chunks;
}

}  // namespace

class BpeModel {
 public:
  explicit BpeModel(const std::filesystem::path& path) : byte_symbols_(make_byte_symbols()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::VocabularyLoadFailure, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    int rank = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.starts_with("#")) continue;
      const auto sp = line.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() ||
          line.find(' ', sp + 1) != std::string::npos) {
        throw Error(ErrorKind::VocabularyLoadFailure,
                    path.string() + ":" + std::to_string(line_no) + ": expected '<left> <right>'");
      }
      ranks_.emplace(line, rank++);
    }
    if (rank == 0) throw Error(ErrorKind::VocabularyLoadFailure, path.string() + ": no merges");
  }

  std::size_t count(std::string_view text) const {
    std::size_t total = 0;
    for (auto chunk : pre_tokenize(text)) total += count_chunk(chunk);
    return total;
  }

 private:
  std::size_t count_chunk(std::string_view chunk) const {
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = cache_.find(std::string(chunk)); it != cache_.end()) return it->second;
    }
    std::vector<std::string> symbols;
    symbols.reserve(chunk.size());
    for (unsigned char c : chunk) symbols.push_back(byte_symbols_[c]);
    std::string pair;
    while (symbols.size() > 1) {
      int best_rank = INT_MAX;
      std::size_t best = 0;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair.assign(symbols[i]).append(" ").append(symbols[i + 1]);
        if (auto it = ranks_.find(pair); it != ranks_.end() && it->second < best_rank) {
          best_rank = it->second;
          best = i;
        }
      }
      if (best_rank == INT_MAX) break;
      const std::string left = symbols[best];
      const std::string right = symbols[best + 1];
      std::vector<std::string> merged;
      merged.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          merged.push_back(left + right);
          ++i;
        } else {
          merged.push_back(std::move(symbols[i]));
        }
      }
      symbols = std::move(merged);
    }
    std::lock_guard lock(cache_mutex_);
    cache_.emplace(std::string(chunk), symbols.size());
    return symbols.size();
  }

  std::array<std::string, 256> byte_symbols_;
  std::unordered_map<std::string, int> ranks_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, std::size_t> cache_;
};

TokenCounter TokenCounter::heuristic() { return TokenCounter{}; }

TokenCounter TokenCounter::from_vocabulary(const std::filesystem::path& merges_file) {
  TokenCounter out;
  out.kind_ = Kind::VocabularyBPE;
  out.vocabulary_uri_ = merges_file;
  out.bpe_ = std::make_shared<const BpeModel>(merges_file);
  return out;
}

TokenCounter TokenCounter::custom(std::string name, std::function<std::size_t(std::string_view)> fn) {
  TokenCounter out;
  out.kind_ = Kind::Custom;
  out.custom_name_ = std::move(name);
  out.custom_ = std::move(fn);
  return out;
}

std::size_t TokenCounter::count(std::string_view text) const {
  if (text.empty()) return 0;
  switch (kind_) {
    case Kind::HeuristicCharQuarter: return (count_code_points(text) + 3) / 4;
    case Kind::VocabularyBPE: return bpe_->count(text);
    case Kind::Custom: return custom_(text);
  }
  return 0;
}

std::string TokenCounter::describe() const {
  switch (kind_) {
    case Kind::HeuristicCharQuarter: return "heuristic";
    case Kind::VocabularyBPE: return "bpe:" + vocabulary_uri_->string();
    case Kind::Custom: return "custom:" + custom_name_;
  }
  return "unknown";
}

}  // namespace vidreason
