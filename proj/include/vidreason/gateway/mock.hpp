#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "vidreason/gateway/transport.hpp"

namespace vidreason::gateway {

/// Options parsed from "mock:<profile>?key=value&key=value".
struct MockSpec {
  std::string profile;
  std::map<std::string, std::string> options;

  std::string option(const std::string& key, const std::string& fallback = {}) const;
};

/// Throws Error(ConfigError) if `uri` is not a mock URI.
MockSpec parse_mock_uri(std::string_view uri);

using MockHandler = std::function<WireReply(const WireRequest&)>;
using MockFactory = std::function<MockHandler(const MockSpec&)>;

/// Counters observed by an instrumented mock.
struct MockStats {
  std::size_t calls = 0;
  std::size_t peak_in_flight = 0;
};

/// In-process backend. Deterministic for a given request body; records call
/// counts and peak concurrency. Common options for every profile:
///   latency_ms=<n>    sleep before answering
///   fail_if=<text>    answer 503 when the request body contains <text>
class MockTransport : public Transport {
 public:
  MockTransport(MockSpec spec, MockHandler handler);
  WireReply send(const WireRequest& request) override;

  MockStats stats() const;
  const MockSpec& spec() const { return spec_; }

 private:
  MockSpec spec_;
  MockHandler handler_;
  int latency_ms_ = 0;
  std::string fail_if_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_{0};
};

/// Name -> factory table of mock profiles. The built-in profiles are
/// documented in docs/backends.md; tests may register their own.
class MockRegistry {
 public:
  static MockRegistry& instance();

  void add(const std::string& profile, MockFactory factory);
  bool contains(const std::string& profile) const;
  /// Throws Error(UnknownMockProfile).
  MockHandler create(const MockSpec& spec) const;

 private:
  MockRegistry();
  mutable std::mutex mutex_;
  std::map<std::string, MockFactory> factories_;
};

std::shared_ptr<MockTransport> make_mock_transport(std::string_view uri);

/// Chat-completions response body carrying `content`.
std::string chat_response_body(const std::string& content);

}  // namespace vidreason::gateway
