#pragma once

#include <memory>
#include <string>

#include "vidreason/gateway/types.hpp"

namespace vidreason::gateway {

/// Routes appended to an endpoint's base URL.
inline constexpr std::string_view kChatRoute = "/chat/completions";
inline constexpr std::string_view kCaptionRoute = "/captions";
inline constexpr std::string_view kTranscriptionRoute = "/transcriptions";

struct WireRequest {
  BackendRole role = BackendRole::LLM;
  std::string route;
  std::string body;
};

struct WireReply {
  /// HTTP status; 0 when no response arrived.
  int status = 0;
  std::string body;
  bool timed_out = false;
  /// Transport-level failure description (connection refused, ...).
  std::string error;
};

/// One network exchange. Implementations must be safe to call concurrently.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual WireReply send(const WireRequest& request) = 0;
};

/// JSON over HTTP(S) POST with bearer authentication from the endpoint's
/// token environment variable.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(BackendEndpoint endpoint);
  WireReply send(const WireRequest& request) override;

 private:
  BackendEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

/// HttpTransport for http(s) URLs, a registered mock for "mock:" URLs.
std::shared_ptr<Transport> make_transport(const BackendEndpoint& endpoint);

}  // namespace vidreason::gateway
