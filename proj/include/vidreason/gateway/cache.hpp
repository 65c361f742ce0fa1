#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "vidreason/gateway/types.hpp"

namespace vidreason::gateway {

/// Identity of a logical model request. Two requests share a key iff every
/// field is equal.
struct CacheKey {
  BackendRole role = BackendRole::LLM;
  std::string model_name;
  std::string prompt;
  std::string media_ref;
  std::optional<TimeInterval> interval;
  /// Decoding parameters (temperature, token limits, decode mode).
  nlohmann::json decode = nlohmann::json::object();

  nlohmann::json canonical() const;
  /// Lower-case hex SHA-256 of the canonical JSON encoding.
  std::string digest() const;
};

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

struct CachedResponse {
  std::string payload;
  nlohmann::json entry;
};

/// Content-addressed response store:
///   <root>/<role>/<first two hex digits>/<digest>.json
/// Each file holds {"key", "request", "response", "timing"}. Writes go to a
/// temporary file in the same directory and are renamed into place, so
/// concurrent readers never see partial entries.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  std::optional<CachedResponse> get(const CacheKey& key) const;
  void put(const CacheKey& key, const std::string& payload, const nlohmann::json& timing);

  std::filesystem::path path_for(const CacheKey& key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

/// Write `contents` to `path` via a temporary sibling and rename.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

}  // namespace vidreason::gateway
