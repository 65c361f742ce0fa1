#include <cstdlib>

#include <httplib.h>

#include "vidreason/error.hpp"
#include "vidreason/gateway/mock.hpp"
#include "vidreason/gateway/transport.hpp"

namespace vidreason::gateway {

HttpTransport::HttpTransport(BackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const auto& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::ConfigError, "bad base_url '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

WireReply HttpTransport::send(const WireRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto seconds = static_cast<time_t>(endpoint_.timeout_seconds);
  const auto micros = static_cast<time_t>((endpoint_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!endpoint_.auth_token_env.empty()) {
    if (const char* token = std::getenv(endpoint_.auth_token_env.c_str()); token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  WireReply reply;
  auto result = client.Post(path_prefix_ + request.route, headers, request.body, "application/json");
  if (!result) {
    const auto err = result.error();
    reply.error = httplib::to_string(err);
    reply.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    return reply;
  }
  reply.status = result->status;
  reply.body = result->body;
  return reply;
}

std::shared_ptr<Transport> make_transport(const BackendEndpoint& endpoint) {
  if (endpoint.is_mock()) return make_mock_transport(endpoint.base_url);
  return std::make_shared<HttpTransport>(endpoint);
}

}  // namespace vidreason::gateway
