#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "vidreason/error.hpp"
#include "vidreason/gateway/cache.hpp"
#include "vidreason/gateway/transport.hpp"
#include "vidreason/gateway/types.hpp"
#include "vidreason/manifest.hpp"

namespace vidreason::gateway {

/// Exponential backoff with jitter; only timeouts, transport errors, 429
/// and 5xx replies are retried.
struct RetryPolicy {
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{8000};
};

struct ReasoningMarkers {
  std::string open = "<think>";
  std::string close = "</think>";
};

/// Removes every open..close segment. An unmatched close marker drops all
/// text before it; an unmatched open marker drops all text after it.
std::string strip_reasoning(std::string_view raw, const ReasoningMarkers& markers);

inline constexpr std::size_t kDefaultMaxInFlight = 64;

struct ClientOptions {
  /// Upper bound on concurrent network requests through this client.
  std::size_t max_in_flight = kDefaultMaxInFlight;
  RetryPolicy retry;
  /// Reasoning delimiters to strip from completions; nullopt keeps the text as is.
  std::optional<ReasoningMarkers> markers = ReasoningMarkers{};
  std::shared_ptr<ResponseCache> cache;
  /// Receives one line per retry or failure.
  std::function<void(const std::string&)> log;
};

struct ClientStats {
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

/// Client for one backend endpoint. Thread-safe; share one instance across
/// tasks so the in-flight bound holds globally.
class ModelClient {
 public:
  ModelClient(BackendEndpoint endpoint, std::shared_ptr<Transport> transport, ClientOptions options = {});
  explicit ModelClient(BackendEndpoint endpoint, ClientOptions options = {});

  /// Errors: RoleMismatch, BackendUnavailable, MalformedResponse, Timeout.
  ClipCaption caption(const CaptionRequest& request);
  /// Segments come back normalized (sorted, overlaps merged).
  std::vector<SubtitleSegment> transcribe(const VideoManifest& video);
  /// Errors: RoleMismatch, BackendUnavailable, ContextLengthExceeded, Timeout,
  /// MalformedResponse.
  Completion complete(const LLMRequest& request);

  ClientStats stats() const;
  const BackendEndpoint& endpoint() const { return endpoint_; }
  const ClientOptions& options() const { return options_; }
  Transport& transport() { return *transport_; }

 private:
  struct Exchange {
    std::string payload;
    int attempts = 0;
    bool from_cache = false;
  };

  void require_role(std::initializer_list<BackendRole> roles, std::string_view operation) const;
  /// Cache lookup, then network with retries. `check` throws on a payload
  /// that cannot be decoded; such payloads are never cached.
  Exchange exchange(const WireRequest& request, const CacheKey& key,
                    const std::function<void(const std::string&)>& check);
  void log(const std::string& line) const;

  BackendEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  ClientOptions options_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

template <typename T>
struct BatchEntry {
  std::optional<T> value;
  ErrorKind error_kind = ErrorKind::BackendUnavailable;
  std::string error;

  bool ok() const { return value.has_value(); }
};

/// Runs task(0..count-1) on at most `width` worker threads. Exceptions from a
/// task propagate after all workers finish.
void run_bounded(std::size_t count, std::size_t width, const std::function<void(std::size_t)>& task);

/// Executes requests with at most `max_in_flight` outstanding. Results are
/// keyed by request id; a failing request records its error and does not
/// affect the others. Duplicate request ids raise InvariantViolation.
std::map<std::string, BatchEntry<Completion>> execute_batch(ModelClient& client, std::span<const LLMRequest> requests,
                                                            std::size_t max_in_flight = kDefaultMaxInFlight);
std::map<std::string, BatchEntry<ClipCaption>> execute_batch(ModelClient& client,
                                                             std::span<const CaptionRequest> requests,
                                                             std::size_t max_in_flight = kDefaultMaxInFlight);

}  // namespace vidreason::gateway
