#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "test_support.hpp"
#include "vidreason/gateway/client.hpp"
#include "vidreason/gateway/mock.hpp"

using namespace vidreason;
using namespace vidreason::gateway;
using nlohmann::json;
using test_support::error_kind_of;
using test_support::TempDir;

namespace {

BackendEndpoint endpoint(BackendRole role, const std::string& url, int max_retries = 3) {
  BackendEndpoint ep;
  ep.role = role;
  ep.base_url = url;
  ep.model_name = default_model_name(role);
  ep.max_retries = max_retries;
  ep.timeout_seconds = 5;
  return ep;
}

ClientOptions fast_options(std::shared_ptr<ResponseCache> cache = nullptr) {
  ClientOptions options;
  options.retry.base_delay = std::chrono::milliseconds(1);
  options.retry.max_delay = std::chrono::milliseconds(4);
  options.cache = std::move(cache);
  return options;
}

struct MockClient {
  std::shared_ptr<MockTransport> transport;
  ModelClient client;

  MockClient(BackendRole role, const std::string& uri, ClientOptions options = fast_options(), int max_retries = 3)
      : transport(make_mock_transport(uri)), client(endpoint(role, uri, max_retries), transport, std::move(options)) {}
};

CaptionRequest clip_request(const std::string& video, double start, double end) {
  CaptionRequest r;
  r.video_id = video;
  r.media_uri = "file:///media/" + video + ".mp4";
  r.interval = {start, end};
  r.prompt = "Describe the clip.";
  return r;
}

LLMRequest llm_request(const std::string& prompt, const std::string& id) {
  LLMRequest r;
  r.prompt = prompt;
  r.request_id = id;
  return r;
}

// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(httplib::Server&)> setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("mock URIs parse into a profile and options") {
  const auto spec = parse_mock_uri("mock:scripted-captions?script=/tmp/a.json&events_per_caption=2");
  CHECK(spec.profile == "scripted-captions");
  CHECK(spec.option("script") == "/tmp/a.json");
  CHECK(spec.option("events_per_caption") == "2");
  CHECK(spec.option("missing", "dflt") == "dflt");
  CHECK(parse_mock_uri("mock:echo").options.empty());
  CHECK(error_kind_of([] { parse_mock_uri("http://x"); }) == ErrorKind::ConfigError);
  CHECK(error_kind_of([] { parse_mock_uri("mock:"); }) == ErrorKind::ConfigError);
  CHECK(error_kind_of([] { parse_mock_uri("mock:echo?novalue"); }) == ErrorKind::ConfigError);
  CHECK(error_kind_of([] { make_mock_transport("mock:no-such-profile"); }) == ErrorKind::UnknownMockProfile);
}

TEST_CASE("echo captioner returns the clip interval") {
  MockClient m(BackendRole::Captioner, "mock:echo");
  const auto caption = m.client.caption(clip_request("v", 0, 8));
  CHECK(caption.text == "mock-caption[0,8]");
  CHECK(caption.start == 0);
  CHECK(caption.end == 8);
  CHECK(m.client.caption(clip_request("v", 8, 12.5)).text == "mock-caption[8,12.5]");
}

TEST_CASE("a cached caption needs no network call") {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  MockClient m(BackendRole::Captioner, "mock:echo", fast_options(cache));
  const auto first = m.client.caption(clip_request("v", 0, 8));
  CHECK(m.transport->stats().calls == 1);
  const auto second = m.client.caption(clip_request("v", 0, 8));
  CHECK(second == first);
  CHECK(m.transport->stats().calls == 1);
  CHECK(m.client.stats().network_calls == 1);
  CHECK(m.client.stats().cache_hits == 1);

  // A fresh client over the same cache directory is also network-free.
  MockClient again(BackendRole::Captioner, "mock:echo", fast_options(std::make_shared<ResponseCache>(dir.path())));
  CHECK(again.client.caption(clip_request("v", 0, 8)) == first);
  CHECK(again.transport->stats().calls == 0);
}

TEST_CASE("empty bodies are malformed and never cached") {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  MockClient m(BackendRole::Captioner, "mock:empty-body", fast_options(cache));
  CHECK(error_kind_of([&] { m.client.caption(clip_request("v", 0, 8)); }) == ErrorKind::MalformedResponse);
  CHECK(error_kind_of([&] { m.client.caption(clip_request("v", 0, 8)); }) == ErrorKind::MalformedResponse);
  CHECK(m.transport->stats().calls == 2);
}

TEST_CASE("speech recognition profiles") {
  const auto video = test_support::simple_video(30);
  MockClient silent(BackendRole::ASR, "mock:silent");
  CHECK(silent.client.transcribe(video).empty());
  MockClient two(BackendRole::ASR, "mock:two-segments");
  CHECK(two.client.transcribe(video).size() == 2);
  MockClient overlapping(BackendRole::ASR, "mock:overlapping");
  const auto merged = overlapping.client.transcribe(video);
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) CHECK(merged[i].end <= merged[i + 1].start);
}

TEST_CASE("chat completions and reasoning stripping") {
  MockClient always(BackendRole::LLM, "mock:always-B");
  CHECK(always.client.complete(llm_request("q", "v/q#0")).text == "B");

  MockClient think(BackendRole::LLM, "mock:think-then-C");
  const auto c = think.client.complete(llm_request("q", "v/q#0"));
  CHECK(c.text == "The answer is: C");
  CHECK(c.raw.find("<think>") != std::string::npos);
  CHECK(c.attempts == 1);
  CHECK_FALSE(c.from_cache);

  auto keep = fast_options();
  keep.markers.reset();
  MockClient raw(BackendRole::LLM, "mock:think-then-C", keep);
  CHECK(raw.client.complete(llm_request("q", "v/q#0")).text.rfind("<think>", 0) == 0);
}

TEST_CASE("strip_reasoning edge cases") {
  const ReasoningMarkers m;
  CHECK(strip_reasoning("plain", m) == "plain");
  CHECK(strip_reasoning("<think>x</think> A ", m) == "A");
  CHECK(strip_reasoning("a<think>x</think>b<think>y</think>c", m) == "abc");
  CHECK(strip_reasoning("reasoning without opener</think>B", m) == "B");
  CHECK(strip_reasoning("C<think>never closed", m) == "C");
  CHECK(strip_reasoning("<think>only thoughts</think>", m).empty());
  CHECK(strip_reasoning("[[r]]D", ReasoningMarkers{"[[", "]]"}) == "D");
}

TEST_CASE("rate-limited requests are retried") {
  MockClient flaky(BackendRole::LLM, "mock:flaky");
  const auto c = flaky.client.complete(llm_request("q", "v/q#0"));
  CHECK(c.text == "B");
  CHECK(c.attempts == 3);
  CHECK(flaky.client.stats().retries == 2);

  MockClient exhausted(BackendRole::LLM, "mock:flaky?failures=5", fast_options(), 2);
  CHECK(error_kind_of([&] { exhausted.client.complete(llm_request("q", "v/q#0")); }) ==
        ErrorKind::BackendUnavailable);
  CHECK(exhausted.transport->stats().calls == 3);
}

TEST_CASE("unavailable, timed-out and overflowing backends map to typed errors") {
  MockClient down(BackendRole::LLM, "mock:unavailable", fast_options(), 1);
  CHECK(error_kind_of([&] { down.client.complete(llm_request("q", "a")); }) == ErrorKind::BackendUnavailable);
  CHECK(down.transport->stats().calls == 2);

  MockClient slow(BackendRole::LLM, "mock:timeout", fast_options(), 1);
  CHECK(error_kind_of([&] { slow.client.complete(llm_request("q", "a")); }) == ErrorKind::Timeout);

  MockClient overflow(BackendRole::LLM, "mock:context-overflow", fast_options(), 3);
  CHECK(error_kind_of([&] { overflow.client.complete(llm_request("q", "a")); }) ==
        ErrorKind::ContextLengthExceeded);
  CHECK(overflow.transport->stats().calls == 1);
}

TEST_CASE("operations check the endpoint role") {
  MockClient llm(BackendRole::LLM, "mock:always-A");
  CHECK(error_kind_of([&] { llm.client.caption(clip_request("v", 0, 1)); }) == ErrorKind::RoleMismatch);
  CHECK(error_kind_of([&] { llm.client.transcribe(test_support::simple_video(5)); }) == ErrorKind::RoleMismatch);
  MockClient cap(BackendRole::Captioner, "mock:echo");
  CHECK(error_kind_of([&] { cap.client.complete(llm_request("q", "a")); }) == ErrorKind::RoleMismatch);
  MockClient judge(BackendRole::Judge, "mock:judge-yes");
  CHECK(judge.client.complete(llm_request("q", "a")).text == "yes");
}

TEST_CASE("client configuration is validated") {
  auto options = fast_options();
  options.max_in_flight = 0;
  CHECK(error_kind_of([&] { ModelClient(endpoint(BackendRole::LLM, "mock:always-A"), options); }) ==
        ErrorKind::ConfigError);
  auto ep = endpoint(BackendRole::LLM, "mock:always-A");
  ep.timeout_seconds = 0;
  CHECK(error_kind_of([&] { ModelClient(ep, fast_options()); }) == ErrorKind::ConfigError);
  ep = endpoint(BackendRole::LLM, "mock:always-A", -1);
  CHECK(error_kind_of([&] { ModelClient(ep, fast_options()); }) == ErrorKind::ConfigError);
}

TEST_CASE("batches respect the in-flight bound and isolate failures") {
  MockClient m(BackendRole::LLM, "mock:always-A?latency_ms=20&fail_if=poison");
  std::vector<LLMRequest> requests;
  for (int i = 0; i < 10; ++i) {
    requests.push_back(llm_request(i == 4 ? "poison pill" : "question " + std::to_string(i), "v/q" + std::to_string(i)));
  }
  const auto results = execute_batch(m.client, requests, 3);
  CHECK(m.transport->stats().peak_in_flight <= 3);
  CHECK(m.transport->stats().peak_in_flight >= 2);
  REQUIRE(results.size() == 10);
  for (const auto& r : requests) {
    const auto& entry = results.at(r.request_id);
    if (r.request_id == "v/q4") {
      CHECK_FALSE(entry.ok());
      CHECK(entry.error_kind == ErrorKind::BackendUnavailable);
    } else {
      REQUIRE(entry.ok());
      CHECK(entry.value->text == "A");
    }
  }
}

TEST_CASE("client-wide bound holds across concurrent batches") {
  auto options = fast_options();
  options.max_in_flight = 2;
  MockClient m(BackendRole::Captioner, "mock:echo?latency_ms=10", options);
  std::vector<CaptionRequest> a, b;
  for (int i = 0; i < 8; ++i) {
    a.push_back(clip_request("a", i, i + 1));
    b.push_back(clip_request("b", i, i + 1));
  }
  std::thread t([&] { execute_batch(m.client, a, 8); });
  const auto results = execute_batch(m.client, b, 8);
  t.join();
  CHECK(m.transport->stats().peak_in_flight <= 2);
  CHECK(results.at("b@3-4").value->text == "mock-caption[3,4]");
}

TEST_CASE("batch results do not depend on request order") {
  std::vector<CaptionRequest> requests;
  for (int i = 0; i < 20; ++i) requests.push_back(clip_request("v", 2.0 * i, 2.0 * i + 2));
  MockClient first(BackendRole::Captioner, "mock:echo?latency_ms=1");
  const auto forward = execute_batch(first.client, requests, 5);
  std::reverse(requests.begin(), requests.end());
  MockClient second(BackendRole::Captioner, "mock:echo?latency_ms=1");
  const auto backward = execute_batch(second.client, requests, 5);
  REQUIRE(forward.size() == backward.size());
  for (const auto& [id, entry] : forward) CHECK(backward.at(id).value == entry.value);
}

TEST_CASE("duplicate request ids in a batch are rejected") {
  MockClient m(BackendRole::LLM, "mock:always-A");
  const std::vector<LLMRequest> requests = {llm_request("x", "same"), llm_request("y", "same")};
  CHECK(error_kind_of([&] { execute_batch(m.client, requests); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("run_bounded runs every task and rethrows") {
  std::vector<int> seen(100, 0);
  run_bounded(100, 7, [&](std::size_t i) { seen[i] += 1; });
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  CHECK_THROWS_AS(run_bounded(10, 3,
                              [](std::size_t i) {
                                if (i == 6) throw Error(ErrorKind::Timeout, "task 6");
                              }),
                  Error);
  run_bounded(0, 4, [](std::size_t) { FAIL("no tasks expected"); });
}

TEST_CASE("cache keys differ exactly when a field differs") {
  CacheKey base;
  base.role = BackendRole::Captioner;
  base.model_name = "captioner";
  base.prompt = "Describe.";
  base.media_ref = "file:///a.mp4#a";
  base.interval = TimeInterval{0, 8};
  base.decode = {{"decoding", "greedy"}, {"max_new_tokens", 128}};
  CacheKey same = base;
  CHECK(same.digest() == base.digest());
  CHECK(base.digest().size() == 64);

  std::vector<CacheKey> variants(7, base);
  variants[0].role = BackendRole::LLM;
  variants[1].model_name = "other";
  variants[2].prompt = "Describe!";
  variants[3].media_ref = "file:///a.mp4#b";
  variants[4].interval = TimeInterval{0, 8.5};
  variants[5].interval.reset();
  variants[6].decode["max_new_tokens"] = 64;
  for (const auto& v : variants) CHECK(v.digest() != base.digest());
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cache files live under role and digest prefix") {
  TempDir dir;
  ResponseCache cache(dir.path());
  CacheKey key;
  key.prompt = "p";
  CHECK_FALSE(cache.get(key).has_value());
  cache.put(key, R"({"x":1})", {{"elapsed_ms", 3}});
  const auto digest = key.digest();
  const auto path = dir.path() / "llm" / digest.substr(0, 2) / (digest + ".json");
  CHECK(cache.path_for(key) == path);
  REQUIRE(std::filesystem::exists(path));
  const auto entry = json::parse(test_support::read_text(path));
  CHECK(entry.contains("key"));
  CHECK(entry.contains("request"));
  CHECK(entry.contains("response"));
  CHECK(entry.contains("timing"));
  CHECK(cache.get(key)->payload == R"({"x":1})");
}

TEST_CASE("the request id does not enter the cache key") {
  TempDir dir;
  MockClient m(BackendRole::LLM, "mock:always-C", fast_options(std::make_shared<ResponseCache>(dir.path())));
  m.client.complete(llm_request("same prompt", "v/q#0"));
  const auto again = m.client.complete(llm_request("same prompt", "v/q#1"));
  CHECK(again.from_cache);
  CHECK(m.transport->stats().calls == 1);
}

TEST_CASE("HTTP transport retries rate limits and sends the bearer token") {
  std::atomic<int> calls{0};
  std::string seen_auth, seen_path;
  std::mutex mutex;
  LocalServer server([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex);
        seen_auth = req.get_header_value("Authorization");
        seen_path = req.path;
      }
      const auto body = json::parse(req.body);
      if (calls++ < 2) {
        res.status = 429;
        res.set_content(R"({"error":{"message":"slow down"}})", "application/json");
        return;
      }
      res.set_content(chat_response_body("echo: " + body["messages"][0]["content"].get<std::string>()),
                      "application/json");
    });
  });
  ::setenv("VIDREASON_TEST_TOKEN", "secret-123", 1);
  auto ep = endpoint(BackendRole::LLM, server.url());
  ep.auth_token_env = "VIDREASON_TEST_TOKEN";
  ModelClient client(ep, fast_options());
  const auto c = client.complete(llm_request("hello", "v/q#0"));
  CHECK(c.text == "echo: hello");
  CHECK(c.attempts == 3);
  CHECK(calls == 3);
  CHECK(seen_auth == "Bearer secret-123");
  CHECK(seen_path == "/v1/chat/completions");
}

TEST_CASE("HTTP transport reports timeouts and unknown routes") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/v1/captions", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_content(R"({"caption":"late"})", "application/json");
    });
  });
  auto ep = endpoint(BackendRole::Captioner, server.url(), 0);
  ep.timeout_seconds = 0.2;
  ModelClient client(ep, fast_options());
  CHECK(error_kind_of([&] { client.caption(clip_request("v", 0, 1)); }) == ErrorKind::Timeout);

  ModelClient asr(endpoint(BackendRole::ASR, server.url(), 0), fast_options());
  CHECK(error_kind_of([&] { asr.transcribe(test_support::simple_video(4)); }) == ErrorKind::BackendUnavailable);

  ModelClient refused(endpoint(BackendRole::LLM, "http://127.0.0.1:1/v1", 0), fast_options());
  CHECK(error_kind_of([&] { refused.complete(llm_request("q", "a")); }) == ErrorKind::BackendUnavailable);
}
