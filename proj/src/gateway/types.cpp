#include "vidreason/gateway/types.hpp"

#include "../text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason::gateway {

std::string_view to_string(BackendRole role) {
  switch (role) {
    case BackendRole::Captioner: return "captioner";
    case BackendRole::ASR: return "asr";
    case BackendRole::LLM: return "llm";
    case BackendRole::Judge: return "judge";
  }
  return "unknown";
}

BackendRole role_from_string(std::string_view name) {
  for (auto role : {BackendRole::Captioner, BackendRole::ASR, BackendRole::LLM, BackendRole::Judge}) {
    if (to_string(role) == name) return role;
  }
  throw Error(ErrorKind::ConfigError, "unknown backend role '" + std::string(name) + "'");
}

void validate(const BackendEndpoint& endpoint) {
  const std::string who = std::string(to_string(endpoint.role)) + " endpoint: ";
  if (endpoint.base_url.empty()) throw Error(ErrorKind::ConfigError, who + "base_url is empty");
  if (!(endpoint.timeout_seconds > 0.0)) throw Error(ErrorKind::ConfigError, who + "timeout must be positive");
  if (endpoint.max_retries < 0) throw Error(ErrorKind::ConfigError, who + "max_retries must be >= 0");
  if (!endpoint.is_mock() && !endpoint.base_url.starts_with("http://") && !endpoint.base_url.starts_with("https://")) {
    throw Error(ErrorKind::ConfigError, who + "base_url must be http(s):// or mock:");
  }
}

std::string default_model_name(BackendRole role) {
  switch (role) {
    case BackendRole::Captioner: return "NVILA-8B-Video";
    case BackendRole::ASR: return "whisper-large-v3";
    case BackendRole::LLM: return "deepseek-reasoner";
    case BackendRole::Judge: return "gpt-4o";
  }
  return {};
}

CaptionDefaults caption_defaults(CaptionStyle style) {
  if (style == CaptionStyle::Nvila) return {"generate caption", 128};
  return {"Briefly describe the video within 40 words", 200};
}

std::string CaptionRequest::request_id() const {
  return video_id + "@" + detail::format_seconds(interval.start) + "-" + detail::format_seconds(interval.end);
}

std::string make_request_id(std::string_view video_id, std::string_view question_id, int attempt) {
  return std::string(video_id) + "/" + std::string(question_id) + "#" + std::to_string(attempt);
}

}  // namespace vidreason::gateway
