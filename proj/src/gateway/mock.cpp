#include "vidreason/gateway/mock.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "../text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason::gateway {

using nlohmann::json;

std::string MockSpec::option(const std::string& key, const std::string& fallback) const {
  auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

MockSpec parse_mock_uri(std::string_view uri) {
  constexpr std::string_view kScheme = "mock:";
  if (!uri.starts_with(kScheme)) throw Error(ErrorKind::ConfigError, "not a mock URI: '" + std::string(uri) + "'");
  uri.remove_prefix(kScheme.size());
  MockSpec spec;
  const auto q = uri.find('?');
  spec.profile = std::string(uri.substr(0, q));
  if (q != std::string_view::npos) {
    auto rest = uri.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const auto item = rest.substr(0, amp);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw Error(ErrorKind::ConfigError, "bad mock option '" + std::string(item) + "'");
      }
      spec.options[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  if (spec.profile.empty()) throw Error(ErrorKind::ConfigError, "empty mock profile");
  return spec;
}

MockTransport::MockTransport(MockSpec spec, MockHandler handler)
    : spec_(std::move(spec)), handler_(std::move(handler)) {
  latency_ms_ = std::stoi(spec_.option("latency_ms", "0"));
  fail_if_ = spec_.option("fail_if");
}

WireReply MockTransport::send(const WireRequest& request) {
  ++calls_;
  const auto now = ++in_flight_;
  auto peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  if (latency_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
  if (!fail_if_.empty() && request.body.find(fail_if_) != std::string::npos) {
    return {503, R"({"error":{"message":"mock failure"}})", false, {}};
  }
  try {
    return handler_(request);
  } catch (const std::exception& e) {
    return {500, json({{"error", {{"message", e.what()}}}}).dump(), false, {}};
  }
}

MockStats MockTransport::stats() const { return {calls_.load(), peak_.load()}; }

std::string chat_response_body(const std::string& content) {
  json body = {{"object", "chat.completion"},
               {"choices", json::array({{{"index", 0},
                                          {"finish_reason", "stop"},
                                          {"message", {{"role", "assistant"}, {"content", content}}}}})}};
  return body.dump();
}

namespace {

WireReply ok(const json& body) { return {200, body.dump(), false, {}}; }

std::string prompt_of(const WireRequest& request) {
  const auto body = json::parse(request.body);
  return body.at("messages").at(0).at("content").get<std::string>();
}

// Scripted media: subtitles and timed visual events per video id.
struct ScriptedVideo {
  json subtitles = json::array();
  std::vector<std::pair<double, std::string>> events;
};

using Script = std::unordered_map<std::string, ScriptedVideo>;

std::shared_ptr<const Script> load_script(const std::string& path) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const Script>> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(path); it != cache.end()) return it->second;
  if (path.empty()) throw Error(ErrorKind::ConfigError, "scripted mock needs ?script=<path>");
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open mock script " + path);
  auto script = std::make_shared<Script>();
  try {
    const auto doc = json::parse(in);
    for (const auto& [video_id, entry] : doc.at("videos").items()) {
      ScriptedVideo video;
      if (entry.contains("subtitles")) video.subtitles = entry["subtitles"];
      if (entry.contains("events")) {
        for (const auto& ev : entry["events"]) {
          video.events.emplace_back(ev.at("time").get<double>(), ev.at("text").get<std::string>());
        }
      }
      std::stable_sort(video.events.begin(), video.events.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      (*script)[video_id] = std::move(video);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "bad mock script " + path + ": " + e.what());
  }
  cache.emplace(path, script);
  return script;
}

MockHandler echo_captioner(const MockSpec&) {
  return [](const WireRequest& request) {
    const auto body = json::parse(request.body);
    return ok({{"caption", "mock-caption[" + detail::format_seconds(body.at("start").get<double>()) + "," +
                               detail::format_seconds(body.at("end").get<double>()) + "]"}});
  };
}

// Describes at most `events_per_caption` events falling inside the clip, so
// coarse clips lose detail the way a length-limited captioner does.
MockHandler scripted_captioner(const MockSpec& spec) {
  auto script = load_script(spec.option("script"));
  const auto per_caption = static_cast<std::size_t>(std::stoul(spec.option("events_per_caption", "1")));
  const std::string idle = spec.option("idle_text", "The scene continues without notable change.");
  return [script, per_caption, idle](const WireRequest& request) {
    const auto body = json::parse(request.body);
    const auto start = body.at("start").get<double>();
    const auto end = body.at("end").get<double>();
    std::vector<std::string> parts;
    if (auto it = script->find(body.at("video_id").get<std::string>()); it != script->end()) {
      for (const auto& [time, text] : it->second.events) {
        if (time >= start && time < end && parts.size() < per_caption) parts.push_back(text);
      }
    }
    return ok({{"caption", parts.empty() ? idle : detail::join(parts, " ")}});
  };
}

MockHandler fixed_segments(json segments) {
  return [segments = std::move(segments)](const WireRequest&) { return ok({{"segments", segments}}); };
}

MockHandler scripted_asr(const MockSpec& spec) {
  auto script = load_script(spec.option("script"));
  return [script](const WireRequest& request) {
    const auto body = json::parse(request.body);
    json segments = json::array();
    if (auto it = script->find(body.at("video_id").get<std::string>()); it != script->end()) {
      segments = it->second.subtitles;
    }
    return ok({{"segments", segments}});
  };
}

MockHandler constant_chat(std::string content) {
  return [content = std::move(content)](const WireRequest&) -> WireReply {
    return {200, chat_response_body(content), false, {}};
  };
}

// Answers "[fact:KEY]" questions by finding "KEY => VALUE" in the prompt.
MockHandler fact_lookup(const MockSpec&) {
  return [](const WireRequest& request) -> WireReply {
    static constexpr std::string_view kTag = "[fact:";
    const auto prompt = prompt_of(request);
    std::string answer = "I could not find the answer in the transcript.";
    std::string thought = "No fact key in the question.";
    const auto tag = prompt.find(kTag);
    const auto tag_end = tag == std::string::npos ? tag : prompt.find(']', tag);
    if (tag_end != std::string::npos) {
      const std::string key = prompt.substr(tag + kTag.size(), tag_end - tag - kTag.size());
      const std::string needle = key + " => ";
      thought = "Searching the transcript for " + key + ".";
      if (const auto pos = prompt.find(needle); pos != std::string::npos) {
        const auto value_start = pos + needle.size();
        const auto line_end = prompt.find('\n', value_start);
        std::string value(detail::trim(std::string_view(prompt).substr(value_start, line_end - value_start)));
        if (!value.empty() && value.back() == '.') value.pop_back();
        answer = value.size() == 1 ? "The answer is: " + value : value;
        thought = "Found " + key + " in the transcript.";
      }
    }
    return {200, chat_response_body("<think>" + thought + "</think>" + answer), false, {}};
  };
}

MockHandler flaky_chat(const MockSpec& spec) {
  const int failures = std::stoi(spec.option("failures", "2"));
  const std::string answer = spec.option("answer", "B");
  auto counts = std::make_shared<std::pair<std::mutex, std::unordered_map<std::string, int>>>();
  return [failures, answer, counts](const WireRequest& request) -> WireReply {
    int seen = 0;
    {
      std::lock_guard lock(counts->first);
      seen = counts->second[request.body]++;
    }
    if (seen < failures) return {429, R"({"error":{"message":"rate limited"}})", false, {}};
    return {200, chat_response_body(answer), false, {}};
  };
}

MockHandler status_only(int status, std::string body) {
  return [status, body = std::move(body)](const WireRequest&) -> WireReply { return {status, body, false, {}}; };
}

}  // namespace

MockRegistry::MockRegistry() {
  // captioners
  factories_["echo"] = echo_captioner;
  factories_["scripted-captions"] = scripted_captioner;
  // speech recognition
  factories_["silent"] = [](const MockSpec&) { return fixed_segments(json::array()); };
  factories_["two-segments"] = [](const MockSpec&) {
    return fixed_segments(json::array({{{"start", 5.0}, {"end", 6.0}, {"text", "x"}},
                                       {{"start", 0.0}, {"end", 1.0}, {"text", "y"}}}));
  };
  factories_["overlapping"] = [](const MockSpec&) {
    return fixed_segments(json::array({{{"start", 0.0}, {"end", 2.0}, {"text", "a"}},
                                       {{"start", 1.0}, {"end", 3.0}, {"text", "b"}}}));
  };
  factories_["scripted-asr"] = scripted_asr;
  // chat models
  factories_["fact-lookup"] = fact_lookup;
  factories_["think-then-C"] = [](const MockSpec&) {
    return constant_chat("<think>The clip at 00:00:08 settles it.</think>The answer is: C");
  };
  factories_["flaky"] = flaky_chat;
  factories_["judge-yes"] = [](const MockSpec&) { return constant_chat("yes"); };
  factories_["context-overflow"] = [](const MockSpec&) {
    return status_only(400, R"({"error":{"code":"context_length_exceeded","message":"maximum context length exceeded"}})");
  };
  // any role
  factories_["empty-body"] = [](const MockSpec&) { return status_only(200, ""); };
  factories_["unavailable"] = [](const MockSpec&) { return status_only(503, R"({"error":{"message":"down"}})"); };
  factories_["timeout"] = [](const MockSpec&) {
    return [](const WireRequest&) -> WireReply { return {0, {}, true, "mock timeout"}; };
  };
}

MockRegistry& MockRegistry::instance() {
  static MockRegistry registry;
  return registry;
}

void MockRegistry::add(const std::string& profile, MockFactory factory) {
  std::lock_guard lock(mutex_);
  factories_[profile] = std::move(factory);
}

bool MockRegistry::contains(const std::string& profile) const {
  std::lock_guard lock(mutex_);
  return factories_.contains(profile) ||
         (profile.size() == 8 && profile.starts_with("always-") && profile[7] >= 'A' && profile[7] <= 'Z');
}

MockHandler MockRegistry::create(const MockSpec& spec) const {
  MockFactory factory;
  {
    std::lock_guard lock(mutex_);
    if (auto it = factories_.find(spec.profile); it != factories_.end()) factory = it->second;
  }
  if (factory) return factory(spec);
  if (spec.profile.size() == 8 && spec.profile.starts_with("always-") && spec.profile[7] >= 'A' &&
      spec.profile[7] <= 'Z') {
    return constant_chat(std::string(1, spec.profile[7]));
  }
  throw Error(ErrorKind::UnknownMockProfile, "'" + spec.profile + "'");
}

std::shared_ptr<MockTransport> make_mock_transport(std::string_view uri) {
  auto spec = parse_mock_uri(uri);
  auto handler = MockRegistry::instance().create(spec);
  return std::make_shared<MockTransport>(std::move(spec), std::move(handler));
}

}  // namespace vidreason::gateway
