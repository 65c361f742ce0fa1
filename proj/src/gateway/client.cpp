#include "vidreason/gateway/client.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

#include "../text_util.hpp"

namespace vidreason::gateway {

using nlohmann::json;

std::string strip_reasoning(std::string_view raw, const ReasoningMarkers& markers) {
  std::string text(raw);
  const auto first_open = text.find(markers.open);
  const auto first_close = text.find(markers.close);
  if (first_close != std::string::npos && (first_open == std::string::npos || first_close < first_open)) {
    text.erase(0, first_close + markers.close.size());
  }
  while (true) {
    const auto open = text.find(markers.open);
    if (open == std::string::npos) break;
    const auto close = text.find(markers.close, open + markers.open.size());
    if (close == std::string::npos) {
      text.erase(open);
      break;
    }
    text.erase(open, close + markers.close.size() - open);
  }
  return std::string(detail::trim(text));
}

namespace {

[[noreturn]] void malformed(const BackendEndpoint& ep, const std::string& what) {
  throw Error(ErrorKind::MalformedResponse, std::string(to_string(ep.role)) + " '" + ep.model_name + "': " + what);
}

json parse_body(const BackendEndpoint& ep, const std::string& payload) {
  if (detail::trim(payload).empty()) malformed(ep, "empty response body");
  try {
    return json::parse(payload);
  } catch (const json::exception& e) {
    malformed(ep, std::string("invalid JSON: ") + e.what());
  }
}

struct ChatText {
  std::string content;
  std::string reasoning;
};

ChatText decode_chat(const BackendEndpoint& ep, const std::string& payload) {
  const auto body = parse_body(ep, payload);
  const auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) malformed(ep, "no choices");
  const auto& message = (*choices)[0].value("message", json::object());
  const auto content = message.find("content");
  if (content == message.end() || !content->is_string()) malformed(ep, "choice without string content");
  ChatText out{content->get<std::string>(), {}};
  if (auto rc = message.find("reasoning_content"); rc != message.end() && rc->is_string()) {
    out.reasoning = rc->get<std::string>();
  }
  return out;
}

std::string decode_caption(const BackendEndpoint& ep, const std::string& payload) {
  const auto body = parse_body(ep, payload);
  const auto caption = body.find("caption");
  if (caption == body.end() || !caption->is_string()) malformed(ep, "missing string field 'caption'");
  return caption->get<std::string>();
}

std::vector<SubtitleSegment> decode_segments(const BackendEndpoint& ep, const std::string& payload) {
  const auto body = parse_body(ep, payload);
  const auto segments = body.find("segments");
  if (segments == body.end() || !segments->is_array()) malformed(ep, "missing array field 'segments'");
  std::vector<SubtitleSegment> out;
  for (const auto& seg : *segments) {
    if (!seg.is_object() || !seg.contains("start") || !seg.contains("end") || !seg.contains("text") ||
        !seg["start"].is_number() || !seg["end"].is_number() || !seg["text"].is_string()) {
      malformed(ep, "segment needs numeric start/end and string text");
    }
    out.push_back({seg["start"].get<double>(), seg["end"].get<double>(), seg["text"].get<std::string>()});
  }
  return out;
}

bool is_context_overflow(const WireReply& reply) {
  if (reply.status != 400 && reply.status != 413) return false;
  return reply.body.find("context_length_exceeded") != std::string::npos ||
         reply.body.find("maximum context length") != std::string::npos;
}

bool is_retryable(const WireReply& reply) {
  return reply.status == 0 || reply.status == 429 || (reply.status >= 500 && reply.status <= 599);
}

std::chrono::milliseconds backoff(const RetryPolicy& policy, int attempt) {
  thread_local std::mt19937 rng{std::random_device{}()};
  const double base = static_cast<double>(policy.base_delay.count()) * std::pow(2.0, attempt - 1);
  const double capped = std::min(base, static_cast<double>(policy.max_delay.count()));
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return std::chrono::milliseconds(static_cast<long long>(capped * jitter(rng)));
}

std::string describe_failure(const WireReply& reply) {
  if (reply.timed_out) return "timed out";
  if (reply.status == 0) return "transport error: " + reply.error;
  return "HTTP " + std::to_string(reply.status);
}

}  // namespace

ModelClient::ModelClient(BackendEndpoint endpoint, std::shared_ptr<Transport> transport, ClientOptions options)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)), options_(std::move(options)) {
  validate(endpoint_);
  if (options_.max_in_flight == 0) throw Error(ErrorKind::ConfigError, "max_in_flight must be at least 1");
  in_flight_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(options_.max_in_flight));
}

ModelClient::ModelClient(BackendEndpoint endpoint, ClientOptions options)
    : ModelClient(endpoint, make_transport(endpoint), std::move(options)) {}

ClientStats ModelClient::stats() const { return {network_calls_.load(), cache_hits_.load(), retries_.load()}; }

void ModelClient::log(const std::string& line) const {
  if (options_.log) options_.log(line);
}

void ModelClient::require_role(std::initializer_list<BackendRole> roles, std::string_view operation) const {
  if (std::find(roles.begin(), roles.end(), endpoint_.role) == roles.end()) {
    throw Error(ErrorKind::RoleMismatch, std::string(operation) + " is not available on a " +
                                             std::string(to_string(endpoint_.role)) + " endpoint");
  }
}

ModelClient::Exchange ModelClient::exchange(const WireRequest& request, const CacheKey& key,
                                            const std::function<void(const std::string&)>& check) {
  if (options_.cache) {
    if (auto hit = options_.cache->get(key)) {
      ++cache_hits_;
      return {std::move(hit->payload), 0, true};
    }
  }
  const int max_attempts = endpoint_.max_retries + 1;
  WireReply reply;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    in_flight_->acquire();
    ++network_calls_;
    try {
      reply = transport_->send(request);
    } catch (const std::exception& e) {
      reply = WireReply{0, {}, false, e.what()};
    }
    in_flight_->release();
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);

    if (reply.status >= 200 && reply.status < 300) {
      check(reply.body);
      if (options_.cache) {
        options_.cache->put(key, reply.body, {{"elapsed_ms", elapsed.count()}, {"attempts", attempt}});
      }
      return {std::move(reply.body), attempt, false};
    }
    if (is_context_overflow(reply)) {
      throw Error(ErrorKind::ContextLengthExceeded, std::string(to_string(endpoint_.role)) + " '" +
                                                        endpoint_.model_name + "': " + reply.body);
    }
    if (!is_retryable(reply)) break;
    if (attempt < max_attempts) {
      ++retries_;
      const auto delay = backoff(options_.retry, attempt);
      log(std::string(to_string(endpoint_.role)) + " attempt " + std::to_string(attempt) + "/" +
          std::to_string(max_attempts) + " " + describe_failure(reply) + "; retrying in " +
          std::to_string(delay.count()) + " ms");
      std::this_thread::sleep_for(delay);
    }
  }
  const std::string what = std::string(to_string(endpoint_.role)) + " '" + endpoint_.model_name + "' at " +
                           endpoint_.base_url + ": " + describe_failure(reply);
  log("giving up: " + what);
  throw Error(reply.timed_out ? ErrorKind::Timeout : ErrorKind::BackendUnavailable, what);
}

ClipCaption ModelClient::caption(const CaptionRequest& request) {
  require_role({BackendRole::Captioner}, "caption");
  if (request.prompt.empty()) throw Error(ErrorKind::InvariantViolation, "caption prompt is empty");
  if (!(request.interval.start >= 0.0 && request.interval.start < request.interval.end)) {
    throw Error(ErrorKind::InvariantViolation, "caption interval must satisfy 0 <= start < end");
  }
  const json decode = {{"mode", "greedy"}, {"max_new_tokens", request.max_new_tokens}};
  const json body = {{"model", endpoint_.model_name},
                     {"video_id", request.video_id},
                     {"media_uri", request.media_uri},
                     {"start", request.interval.start},
                     {"end", request.interval.end},
                     {"prompt", request.prompt},
                     {"max_new_tokens", request.max_new_tokens},
                     {"decoding", "greedy"}};
  CacheKey key{endpoint_.role, endpoint_.model_name, request.prompt,
               request.media_uri + "#" + request.video_id, request.interval, decode};
  auto ex = exchange({endpoint_.role, std::string(kCaptionRoute), body.dump()}, key,
                     [this](const std::string& p) { decode_caption(endpoint_, p); });
  return {request.interval.start, request.interval.end, decode_caption(endpoint_, ex.payload)};
}

std::vector<SubtitleSegment> ModelClient::transcribe(const VideoManifest& video) {
  require_role({BackendRole::ASR}, "transcribe");
  const json body = {{"model", endpoint_.model_name},
                     {"video_id", video.video_id},
                     {"media_uri", video.media_uri},
                     {"duration", video.duration}};
  CacheKey key{endpoint_.role, endpoint_.model_name, "", video.media_uri + "#" + video.video_id,
               TimeInterval{0.0, video.duration}, json::object()};
  auto ex = exchange({endpoint_.role, std::string(kTranscriptionRoute), body.dump()}, key,
                     [this](const std::string& p) { decode_segments(endpoint_, p); });
  return normalize_subtitles(decode_segments(endpoint_, ex.payload));
}

Completion ModelClient::complete(const LLMRequest& request) {
  require_role({BackendRole::LLM, BackendRole::Judge}, "complete");
  json decode = {{"temperature", request.temperature}};
  json body = {{"model", endpoint_.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
               {"temperature", request.temperature}};
  if (request.max_output_tokens) {
    decode["max_tokens"] = *request.max_output_tokens;
    body["max_tokens"] = *request.max_output_tokens;
  }
  CacheKey key{endpoint_.role, endpoint_.model_name, request.prompt, "", std::nullopt, decode};
  auto ex = exchange({endpoint_.role, std::string(kChatRoute), body.dump()}, key,
                     [this](const std::string& p) { decode_chat(endpoint_, p); });
  const auto chat = decode_chat(endpoint_, ex.payload);
  Completion out;
  out.attempts = ex.attempts;
  out.from_cache = ex.from_cache;
  if (options_.markers) {
    out.raw = chat.reasoning.empty() ? chat.content
                                     : options_.markers->open + chat.reasoning + options_.markers->close + chat.content;
    out.text = strip_reasoning(out.raw, *options_.markers);
  } else {
    out.raw = chat.content;
    out.text = std::string(detail::trim(chat.content));
  }
  return out;
}

void run_bounded(std::size_t count, std::size_t width, const std::function<void(std::size_t)>& task) {
  if (width == 0) throw Error(ErrorKind::ConfigError, "concurrency width must be at least 1");
  if (count == 0) return;
  const std::size_t workers = std::min(width, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

template <typename Request, typename Result, typename IdFn, typename CallFn>
std::map<std::string, BatchEntry<Result>> run_batch(std::span<const Request> requests, std::size_t max_in_flight,
                                                    IdFn id_of, CallFn call) {
  std::vector<std::string> ids;
  ids.reserve(requests.size());
  std::set<std::string> seen;
  for (const auto& r : requests) {
    ids.push_back(id_of(r));
    if (!seen.insert(ids.back()).second) {
      throw Error(ErrorKind::InvariantViolation, "duplicate request id '" + ids.back() + "'");
    }
  }
  std::vector<BatchEntry<Result>> entries(requests.size());
  run_bounded(requests.size(), max_in_flight, [&](std::size_t i) {
    try {
      entries[i].value = call(requests[i]);
    } catch (const Error& e) {
      entries[i].error_kind = e.kind();
      entries[i].error = e.what();
    } catch (const std::exception& e) {
      entries[i].error_kind = ErrorKind::BackendUnavailable;
      entries[i].error = e.what();
    }
  });
  std::map<std::string, BatchEntry<Result>> out;
  for (std::size_t i = 0; i < requests.size(); ++i) out.emplace(std::move(ids[i]), std::move(entries[i]));
  return out;
}

}  // namespace

std::map<std::string, BatchEntry<Completion>> execute_batch(ModelClient& client, std::span<const LLMRequest> requests,
                                                            std::size_t max_in_flight) {
  return run_batch<LLMRequest, Completion>(
      requests, max_in_flight, [](const LLMRequest& r) { return r.request_id; },
      [&client](const LLMRequest& r) { return client.complete(r); });
}

std::map<std::string, BatchEntry<ClipCaption>> execute_batch(ModelClient& client,
                                                             std::span<const CaptionRequest> requests,
                                                             std::size_t max_in_flight) {
  return run_batch<CaptionRequest, ClipCaption>(
      requests, max_in_flight, [](const CaptionRequest& r) { return r.request_id(); },
      [&client](const CaptionRequest& r) { return client.caption(r); });
}

}  // namespace vidreason::gateway
