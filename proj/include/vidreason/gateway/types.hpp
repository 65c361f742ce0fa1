#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "vidreason/manifest.hpp"

namespace vidreason::gateway {

enum class BackendRole { Captioner, ASR, LLM, Judge };
std::string_view to_string(BackendRole role);
BackendRole role_from_string(std::string_view name);

/// Where and how to reach one model. `base_url` is an http(s) URL prefix
/// (e.g. "http://localhost:8000/v1") or "mock:<profile>[?key=value&...]".
struct BackendEndpoint {
  BackendRole role = BackendRole::LLM;
  std::string base_url;
  std::string model_name;
  /// Name of the environment variable holding a bearer token; may be empty.
  std::string auth_token_env;
  double timeout_seconds = 120.0;
  int max_retries = 3;

  bool is_mock() const { return base_url.starts_with("mock:"); }
};

/// Throws Error(ConfigError) for non-positive timeouts or negative retries.
void validate(const BackendEndpoint& endpoint);

/// Default model names per role.
std::string default_model_name(BackendRole role);

/// Captioner prompting conventions: general chat captioners versus the
/// NVILA-style video captioner.
enum class CaptionStyle { General, Nvila };

struct CaptionDefaults {
  std::string prompt;
  int max_new_tokens = 0;
};
CaptionDefaults caption_defaults(CaptionStyle style);

enum class DecodeMode { Greedy };

struct CaptionRequest {
  std::string video_id;
  std::string media_uri;
  TimeInterval interval;
  std::string prompt;
  int max_new_tokens = 128;
  DecodeMode decode = DecodeMode::Greedy;

  /// "<video_id>@<start>-<end>"
  std::string request_id() const;
};

inline constexpr double kDefaultTemperature = 1.0;

struct LLMRequest {
  std::string prompt;
  double temperature = kDefaultTemperature;
  std::optional<int> max_output_tokens;
  std::string request_id;
};

/// "<video_id>/<question_id>#<attempt>"
std::string make_request_id(std::string_view video_id, std::string_view question_id, int attempt = 0);

/// Text returned by a chat model.
struct Completion {
  /// Answer with reasoning segments removed.
  std::string text;
  /// Full model output including any reasoning trace.
  std::string raw;
  int attempts = 0;
  bool from_cache = false;
};

}  // namespace vidreason::gateway
