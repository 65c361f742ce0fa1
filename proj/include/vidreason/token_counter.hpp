#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace vidreason {

class BpeModel;

/// Counts tokens of rendered text. Copies share the loaded vocabulary.
///
/// Heuristic counting returns ceil(code_points / 4). The vocabulary counter
/// runs byte-level BPE merges from a merges file (see docs/token_counting.md).
/// A custom counting function can be supplied for experiments and tests.
class TokenCounter {
 public:
  enum class Kind { HeuristicCharQuarter, VocabularyBPE, Custom };

  TokenCounter() = default;  // heuristic

  static TokenCounter heuristic();
  /// Throws Error(VocabularyLoadFailure) if the file is missing or malformed.
  static TokenCounter from_vocabulary(const std::filesystem::path& merges_file);
  static TokenCounter custom(std::string name, std::function<std::size_t(std::string_view)> fn);

  std::size_t count(std::string_view text) const;

  Kind kind() const { return kind_; }
  const std::optional<std::filesystem::path>& vocabulary_uri() const { return vocabulary_uri_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::HeuristicCharQuarter;
  std::optional<std::filesystem::path> vocabulary_uri_;
  std::shared_ptr<const BpeModel> bpe_;
  std::string custom_name_;
  std::function<std::size_t(std::string_view)> custom_;
};

/// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t count_code_points(std::string_view text);

}  // namespace vidreason
