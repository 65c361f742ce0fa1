#include "vidreason/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "vidreason/error.hpp"
#include "vidreason/gateway/mock.hpp"

namespace vidreason {

using nlohmann::json;
using gateway::BackendEndpoint;
using gateway::BackendRole;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

void reject_unknown(const json& j, std::string_view where, const std::set<std::string>& known) {
  if (!j.is_object()) config_error(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) config_error("unknown key '" + key + "' in " + std::string(where));
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string_view counter_kind_name(TokenCounter::Kind kind) {
  switch (kind) {
    case TokenCounter::Kind::HeuristicCharQuarter: return "heuristic";
    case TokenCounter::Kind::VocabularyBPE: return "bpe";
    case TokenCounter::Kind::Custom: return "custom";
  }
  return "unknown";
}

json endpoint_json(const BackendEndpoint& ep) {
  json j = {{"base_url", ep.base_url},
            {"model", ep.model_name},
            {"timeout_seconds", ep.timeout_seconds},
            {"max_retries", ep.max_retries}};
  if (!ep.auth_token_env.empty()) j["auth_token_env"] = ep.auth_token_env;
  return j;
}

// Mock script paths inside "mock:<profile>?script=..." follow the same
// relative-path rule as the other config paths.
std::string resolve_mock_script(const std::filesystem::path& base, const std::string& url) {
  if (base.empty() || !url.starts_with("mock:")) return url;
  const auto spec = gateway::parse_mock_uri(url);
  const auto script = spec.options.find("script");
  if (script == spec.options.end() || std::filesystem::path(script->second).is_absolute()) return url;
  std::string out = "mock:" + spec.profile;
  char sep = '?';
  for (const auto& [key, value] : spec.options) {
    out += sep + key + "=" + (key == "script" ? (base / value).string() : value);
    sep = '&';
  }
  return out;
}

BackendEndpoint endpoint_from_json(BackendRole role, const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "endpoints." + std::string(to_string(role));
  reject_unknown(j, where, {"base_url", "model", "auth_token_env", "timeout_seconds", "max_retries"});
  BackendEndpoint ep;
  ep.role = role;
  ep.base_url = resolve_mock_script(base_dir, j.at("base_url").get<std::string>());
  ep.model_name = j.value("model", gateway::default_model_name(role));
  ep.auth_token_env = j.value("auth_token_env", std::string());
  ep.timeout_seconds = j.value("timeout_seconds", ep.timeout_seconds);
  ep.max_retries = j.value("max_retries", ep.max_retries);
  return ep;
}

}  // namespace

TokenCounter make_counter(const CounterSpec& spec) {
  switch (spec.kind) {
    case TokenCounter::Kind::HeuristicCharQuarter: return TokenCounter::heuristic();
    case TokenCounter::Kind::VocabularyBPE: return TokenCounter::from_vocabulary(spec.vocabulary);
    case TokenCounter::Kind::Custom: break;
  }
  config_error("custom token counters cannot be configured from a file");
}

void validate(const RunConfig& c) {
  if (c.label.empty()) config_error("label is empty");
  if (c.manifest_path.empty()) config_error("manifest path is empty");
  if (c.output_dir.empty()) config_error("output_dir is empty");
  for (auto role : {BackendRole::Captioner, BackendRole::ASR, BackendRole::LLM}) {
    if (!c.endpoints.contains(role)) config_error("missing endpoint for role " + std::string(to_string(role)));
  }
  for (const auto& [role, ep] : c.endpoints) {
    if (ep.role != role) config_error("endpoint registered under the wrong role " + std::string(to_string(role)));
    gateway::validate(ep);
  }
  if (c.context_limit == 0) config_error("context_limit must be positive");
  if (!(c.initial_clip_length > 0.0) || !std::isfinite(c.initial_clip_length)) {
    config_error("initial_clip_length must be positive");
  }
  if (c.fixed_clip_length && (!(*c.fixed_clip_length > 0.0) || !std::isfinite(*c.fixed_clip_length))) {
    config_error("fixed_clip_length must be positive");
  }
  if (c.drop && !(c.drop->rate >= 0.0 && c.drop->rate < 1.0)) config_error("drop rate must lie in [0, 1)");
  if (c.max_in_flight == 0) config_error("max_in_flight must be at least 1");
  if (c.video_parallelism == 0) config_error("video_parallelism must be at least 1");
  if (!(c.temperature >= 0.0)) config_error("temperature must be non-negative");
  if (c.max_output_tokens && *c.max_output_tokens <= 0) config_error("max_output_tokens must be positive");
  if (c.caption_max_new_tokens && *c.caption_max_new_tokens <= 0) {
    config_error("caption_max_new_tokens must be positive");
  }
  if (c.caption_prompt && c.caption_prompt->empty()) config_error("caption_prompt is empty");
  if (c.reasoning_markers && (c.reasoning_markers->open.empty() || c.reasoning_markers->close.empty())) {
    config_error("reasoning markers must be non-empty");
  }
  if (c.retry_base_delay.count() < 0 || c.retry_max_delay < c.retry_base_delay) {
    config_error("retry delays must satisfy 0 <= base <= max");
  }
  if (!(c.failure_budget >= 0.0 && c.failure_budget <= 1.0)) config_error("failure_budget must lie in [0, 1]");
  if (c.counter.kind == TokenCounter::Kind::VocabularyBPE && c.counter.vocabulary.empty()) {
    config_error("bpe counter needs a vocabulary file");
  }
}

json to_json(const RunConfig& c) {
  json endpoints = json::object();
  for (const auto& [role, ep] : c.endpoints) endpoints[std::string(to_string(role))] = endpoint_json(ep);
  json counter = {{"kind", counter_kind_name(c.counter.kind)}};
  if (!c.counter.vocabulary.empty()) counter["vocabulary"] = c.counter.vocabulary.string();
  json j = {{"label", c.label},
            {"manifest", c.manifest_path.string()},
            {"endpoints", endpoints},
            {"caption_style", c.caption_style == gateway::CaptionStyle::Nvila ? "nvila" : "general"},
            {"counter", counter},
            {"context_limit", c.context_limit},
            {"initial_clip_length", c.initial_clip_length},
            {"time_aware", c.time_aware},
            {"max_in_flight", c.max_in_flight},
            {"video_parallelism", c.video_parallelism},
            {"temperature", c.temperature},
            {"retry", {{"base_delay_ms", c.retry_base_delay.count()}, {"max_delay_ms", c.retry_max_delay.count()}}},
            {"cache_root", c.cache_root.string()},
            {"output_dir", c.output_dir.string()},
            {"resume", c.resume},
            {"failure_budget", c.failure_budget}};
  if (c.caption_prompt) j["caption_prompt"] = *c.caption_prompt;
  if (c.caption_max_new_tokens) j["caption_max_new_tokens"] = *c.caption_max_new_tokens;
  if (c.fixed_clip_length) j["fixed_clip_length"] = *c.fixed_clip_length;
  if (c.drop) j["drop"] = {{"target", to_string(c.drop->target)}, {"rate", c.drop->rate}};
  if (c.max_output_tokens) j["max_output_tokens"] = *c.max_output_tokens;
  j["reasoning_markers"] = c.reasoning_markers
                               ? json{{"open", c.reasoning_markers->open}, {"close", c.reasoning_markers->close}}
                               : json(nullptr);
  return j;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "config",
                 {"label", "manifest", "endpoints", "caption_style", "caption_prompt", "caption_max_new_tokens",
                  "counter", "context_limit", "initial_clip_length", "fixed_clip_length", "drop", "time_aware",
                  "max_in_flight", "video_parallelism", "temperature", "max_output_tokens", "reasoning_markers",
                  "retry", "cache_root", "output_dir", "resume", "failure_budget"});
  for (const char* key : {"manifest", "endpoints", "output_dir"}) {
    if (!j.contains(key)) config_error(std::string("missing required key '") + key + "'");
  }
  RunConfig c;
  try {
    c.label = j.value("label", c.label);
    c.manifest_path = resolve(base_dir, j.at("manifest").get<std::string>());
    const auto& endpoints = j.at("endpoints");
    reject_unknown(endpoints, "endpoints", {"captioner", "asr", "llm", "judge"});
    for (const auto& [name, value] : endpoints.items()) {
      const auto role = gateway::role_from_string(name);
      c.endpoints[role] = endpoint_from_json(role, value, base_dir);
    }
    if (j.contains("caption_style")) {
      const auto style = j["caption_style"].get<std::string>();
      if (style == "nvila") {
        c.caption_style = gateway::CaptionStyle::Nvila;
      } else if (style == "general") {
        c.caption_style = gateway::CaptionStyle::General;
      } else {
        config_error("caption_style must be 'nvila' or 'general'");
      }
    }
    if (j.contains("caption_prompt")) c.caption_prompt = j["caption_prompt"].get<std::string>();
    if (j.contains("caption_max_new_tokens")) c.caption_max_new_tokens = j["caption_max_new_tokens"].get<int>();
    if (j.contains("counter")) {
      const auto& counter = j["counter"];
      reject_unknown(counter, "counter", {"kind", "vocabulary"});
      const auto kind = counter.at("kind").get<std::string>();
      if (kind == "heuristic") {
        c.counter.kind = TokenCounter::Kind::HeuristicCharQuarter;
      } else if (kind == "bpe") {
        c.counter.kind = TokenCounter::Kind::VocabularyBPE;
      } else {
        config_error("counter.kind must be 'heuristic' or 'bpe'");
      }
      c.counter.vocabulary = resolve(base_dir, counter.value("vocabulary", std::string()));
    }
    c.context_limit = j.value("context_limit", c.context_limit);
    c.initial_clip_length = j.value("initial_clip_length", c.initial_clip_length);
    if (j.contains("fixed_clip_length") && !j["fixed_clip_length"].is_null()) {
      c.fixed_clip_length = j["fixed_clip_length"].get<double>();
    }
    if (j.contains("drop") && !j["drop"].is_null()) {
      const auto& drop = j["drop"];
      reject_unknown(drop, "drop", {"target", "rate"});
      DropSpec spec;
      const auto target = drop.at("target").get<std::string>();
      if (target == "subtitles") {
        spec.target = DropTarget::Subtitles;
      } else if (target == "captions") {
        spec.target = DropTarget::Captions;
      } else {
        config_error("drop.target must be 'subtitles' or 'captions'");
      }
      spec.rate = drop.at("rate").get<double>();
      c.drop = spec;
    }
    c.time_aware = j.value("time_aware", c.time_aware);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.video_parallelism = j.value("video_parallelism", c.video_parallelism);
    c.temperature = j.value("temperature", c.temperature);
    if (j.contains("max_output_tokens") && !j["max_output_tokens"].is_null()) {
      c.max_output_tokens = j["max_output_tokens"].get<int>();
    }
    if (j.contains("reasoning_markers")) {
      const auto& markers = j["reasoning_markers"];
      if (markers.is_null()) {
        c.reasoning_markers.reset();
      } else {
        reject_unknown(markers, "reasoning_markers", {"open", "close"});
        c.reasoning_markers = gateway::ReasoningMarkers{markers.at("open").get<std::string>(),
                                                        markers.at("close").get<std::string>()};
      }
    }
    if (j.contains("retry")) {
      const auto& retry = j["retry"];
      reject_unknown(retry, "retry", {"base_delay_ms", "max_delay_ms"});
      c.retry_base_delay = std::chrono::milliseconds(retry.value("base_delay_ms", c.retry_base_delay.count()));
      c.retry_max_delay = std::chrono::milliseconds(retry.value("max_delay_ms", c.retry_max_delay.count()));
    }
    c.cache_root = resolve(base_dir, j.value("cache_root", std::string()));
    c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    c.resume = j.value("resume", c.resume);
    c.failure_budget = j.value("failure_budget", c.failure_budget);
  } catch (const json::exception& e) {
    config_error(std::string("bad config value: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

}  // namespace vidreason
