#include "vidreason/gateway/cache.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <unistd.h>

#include "vidreason/error.hpp"

namespace vidreason::gateway {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

json CacheKey::canonical() const {
  json j = {{"role", std::string(to_string(role))},
            {"model", model_name},
            {"prompt", prompt},
            {"media", media_ref},
            {"decode", decode}};
  j["interval"] = interval ? json::array({interval->start, interval->end}) : json(nullptr);
  return j;
}

std::string CacheKey::digest() const { return sha256_hex(canonical().dump()); }

void atomic_write(const std::filesystem::path& path, std::string_view contents) {
  static std::atomic<unsigned long> sequence{0};
  std::filesystem::create_directories(path.parent_path());
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << "." << std::this_thread::get_id() << "."
           << sequence++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::IoError, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ResponseCache::path_for(const CacheKey& key) const {
  const auto digest = key.digest();
  return root_ / std::string(to_string(key.role)) / digest.substr(0, 2) / (digest + ".json");
}

std::optional<CachedResponse> ResponseCache::get(const CacheKey& key) const {
  const auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    auto entry = json::parse(in);
    if (!entry.contains("response") || !entry["response"].is_string()) return std::nullopt;
    // A digest collision or a hand-edited file must not leak a foreign response.
    if (entry.value("request", json()) != key.canonical()) return std::nullopt;
    CachedResponse hit{entry["response"].get<std::string>(), std::move(entry)};
    return hit;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const CacheKey& key, const std::string& payload, const json& timing) {
  json entry = {{"key", key.digest()}, {"request", key.canonical()}, {"response", payload}, {"timing", timing}};
  atomic_write(path_for(key), entry.dump(2));
}

}  // namespace vidreason::gateway
