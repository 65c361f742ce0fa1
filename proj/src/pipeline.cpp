#include "vidreason/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "embedded_templates.hpp"
#include "text_util.hpp"
#include "vidreason/answer_parse.hpp"
#include "vidreason/error.hpp"
#include "vidreason/gateway/cache.hpp"
#include "vidreason/gateway/mock.hpp"
#include "vidreason/prompt.hpp"

namespace vidreason {

using nlohmann::json;
using gateway::BackendRole;
using gateway::ModelClient;

GatewayCaptionSource::GatewayCaptionSource(ModelClient& client, gateway::CaptionDefaults prompt,
                                           std::size_t max_in_flight)
    : client_(client), prompt_(std::move(prompt)), max_in_flight_(max_in_flight) {}

std::vector<ClipCaption> GatewayCaptionSource::captions(const VideoManifest& video, const ClipPlan& plan) {
  std::vector<gateway::CaptionRequest> requests;
  requests.reserve(plan.clips.size());
  for (const auto& clip : plan.clips) {
    requests.push_back({video.video_id, video.media_uri, clip, prompt_.prompt, prompt_.max_new_tokens});
  }
  auto results = gateway::execute_batch(client_, requests, max_in_flight_);
  std::vector<ClipCaption> out;
  out.reserve(requests.size());
  for (const auto& request : requests) {
    auto& entry = results.at(request.request_id());
    if (!entry.ok()) {
      throw Error(ErrorKind::CaptionSourceFailure, "clip [" + detail::format_seconds(request.interval.start) + ", " +
                                                       detail::format_seconds(request.interval.end) + ") of " +
                                                       video.video_id + ": " + entry.error);
    }
    out.push_back(std::move(*entry.value));
  }
  return out;
}

std::size_t RunStats::network_calls() const {
  std::size_t total = 0;
  for (const auto& [_, r] : roles) total += r.network_calls;
  return total;
}

json to_json(const RunStats& s) {
  json roles = json::object();
  for (const auto& [role, r] : s.roles) {
    json j = {{"network_calls", r.network_calls}, {"cache_hits", r.cache_hits}, {"retries", r.retries}};
    if (r.peak_in_flight) j["peak_in_flight"] = *r.peak_in_flight;
    roles[std::string(to_string(role))] = j;
  }
  const auto& t = s.timing;
  return {{"videos", s.videos},
          {"videos_resumed", s.videos_resumed},
          {"questions", s.questions},
          {"rebudgeted", s.rebudgeted},
          {"roles", roles},
          {"timing_seconds",
           {{"load", t.load},
            {"transcribe", t.transcribe},
            {"reduce", t.reduce},
            {"answer", t.answer},
            {"score", t.score},
            {"persist", t.persist},
            {"total", t.total}}}};
}

Verdict abstention(const VideoManifest& video, const Question& question, std::string note, bool failed) {
  Verdict v;
  v.video_id = video.video_id;
  v.question_id = question.question_id;
  v.kind = question.kind;
  v.pre_post_role = question.pre_post_role;
  v.gold = describe(question.ground_truth);
  v.abstained = true;
  v.note = std::move(note);
  v.failed = failed;
  if (question.kind == QuestionKind::GroundedQA) v.iou = 0.0;
  return v;
}

Verdict score_answer(const VideoManifest& video, const Question& question, const std::string& answer_text,
                     std::optional<bool> judge_says) {
  Verdict v = abstention(video, question, {}, false);
  v.abstained = false;
  if (question.has_options()) {
    std::set<char> allowed;
    for (const auto& option : question.options) allowed.insert(option.letter);
    const auto letter = parse_letter(answer_text, allowed);
    const char gold = std::get<LetterAnswer>(question.ground_truth).letter;
    if (!letter) {
      v.abstained = true;
      v.note = "no answer letter found";
      return v;
    }
    v.predicted = std::string(1, *letter);
    v.correct = *letter == gold;
  } else if (question.kind == QuestionKind::OpenEnded) {
    v.predicted = clean_open_answer(answer_text);
    if (v.predicted.empty()) {
      v.abstained = true;
      v.note = "empty answer";
      return v;
    }
    v.correct = open_answer_matches(v.predicted, std::get<TextAnswer>(question.ground_truth).text);
    if (!v.correct && judge_says) {
      v.correct = *judge_says;
      v.note = *judge_says ? "judged equivalent" : "judged different";
    }
  } else {
    try {
      const auto prediction = parse_intervals(answer_text);
      v.predicted = format_intervals(prediction);
      v.iou = interval_iou(prediction, std::get<IntervalAnswer>(question.ground_truth).intervals);
    } catch (const Error& e) {
      v.abstained = true;
      v.iou = 0.0;
      v.note = e.what();
    }
  }
  return v;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json transcript_json(const Transcript& t) {
  return {{"clip_length", t.clip_length},
          {"token_count", t.token_count},
          {"subtitle_lines", t.subtitle_lines},
          {"caption_lines", t.caption_lines},
          {"full_text", t.full_text}};
}

json budget_json(const BudgetPlan& plan) {
  json trace = json::array();
  for (const auto& step : plan.trace) trace.push_back({{"clip_length", step.clip_length}, {"tokens", step.token_count}});
  return {{"initial_clip_length", plan.initial_clip_length},
          {"final_clip_length", plan.final_clip_length},
          {"context_limit", plan.context_limit},
          {"prompt_overhead", plan.prompt_overhead},
          {"final_token_count", plan.final_token_count},
          {"outcome", to_string(plan.outcome)},
          {"dropped_caption_lines", plan.dropped_caption_lines},
          {"dropped_subtitle_lines", plan.dropped_subtitle_lines},
          {"trace", trace}};
}

json subtitles_json(const std::vector<SubtitleSegment>& subs) {
  json out = json::array();
  for (const auto& s : subs) out.push_back({{"start", s.start}, {"end", s.end}, {"text", s.text}});
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, path.string() + " is not valid JSON: " + e.what());
  }
}

std::filesystem::path artifact_path(const std::filesystem::path& run_dir, const std::string& video_id) {
  return run_dir / "videos" / (video_id + ".json");
}

std::string judge_prompt(const Question& question, const std::string& candidate) {
  std::string out(embedded::template_text("judge"));
  auto put = [&out](std::string_view slot, const std::string& value) {
    const auto pos = out.find(slot);
    if (pos != std::string::npos) out.replace(pos, slot.size(), value);
  };
  put("{Question}", question.text);
  put("{Reference}", std::get<TextAnswer>(question.ground_truth).text);
  put("{Candidate}", candidate);
  return out;
}

bool judge_reply_is_yes(std::string_view reply) {
  const auto text = detail::trim(reply);
  if (text.size() < 3) return false;
  std::string head(text.substr(0, 3));
  std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
  return head == "yes";
}

struct QuestionWork {
  const Question* question = nullptr;
  const VideoManifest* video = nullptr;
  const Transcript* transcript = nullptr;
  std::string prompt;
  std::optional<gateway::Completion> completion;
  std::optional<ErrorKind> error_kind;
  std::string error;
  bool rebudgeted = false;
  std::optional<bool> judge;
  Verdict verdict;
};

struct VideoWork {
  const VideoManifest* video = nullptr;
  bool resumed = false;
  std::vector<SubtitleSegment> subtitles;
  std::optional<ReductionResult> reduction;
  /// Set when the video cannot produce answers; every question abstains.
  std::optional<std::string> failure;
  bool failure_is_backend = false;
  std::vector<QuestionWork> questions;
};

std::optional<std::vector<Verdict>> load_complete_artifact(const std::filesystem::path& path,
                                                           const VideoManifest& video) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto artifact = json::parse(read_file(path));
    if (artifact.value("schema_version", 0) != kArtifactSchemaVersion) return std::nullopt;
    if (artifact.value("video_id", std::string()) != video.video_id) return std::nullopt;
    if (artifact.value("status", std::string()) != "complete") return std::nullopt;
    std::map<std::string, Verdict> by_id;
    for (const auto& q : artifact.at("questions")) {
      auto v = verdict_from_json(q.at("verdict"));
      by_id[v.question_id] = std::move(v);
    }
    std::vector<Verdict> out;
    for (const auto& q : video.questions) {
      auto it = by_id.find(q.question_id);
      if (it == by_id.end()) return std::nullopt;
      out.push_back(it->second);
    }
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::size_t prompt_overhead(const VideoManifest& video, const TokenCounter& counter, double widest_clip_length) {
  Transcript empty;
  empty.clip_length = widest_clip_length;
  std::size_t overhead = 0;
  for (const auto& q : video.questions) overhead = std::max(overhead, counter.count(render_prompt(empty, q)));
  return overhead;
}

// Largest clip length the reduction can reach; its rendering is the longest
// ClipLength slot value, so the overhead estimate covers every iteration.
double widest_clip_length(const RunConfig& config, double duration) {
  if (config.fixed_clip_length) return *config.fixed_clip_length;
  double length = config.initial_clip_length;
  while (length < duration) length *= 2.0;
  return length;
}

class Pipeline {
 public:
  Pipeline(const RunConfig& config, const RunHooks& hooks) : config_(config), hooks_(hooks) {}

  RunResult run();

 private:
  void log(const std::string& line) const {
    if (hooks_.log) hooks_.log(line);
  }
  std::unique_ptr<ModelClient> make_client(BackendRole role);
  void transcribe(VideoWork& work);
  void reduce(VideoWork& work);
  void answer(std::vector<VideoWork>& works);
  void judge(std::vector<VideoWork>& works);
  void score(VideoWork& work);
  void persist(const VideoWork& work);

  RunConfig config_;
  const RunHooks& hooks_;
  std::optional<TokenCounter> counter_;
  std::shared_ptr<gateway::ResponseCache> cache_;
  std::map<BackendRole, std::unique_ptr<ModelClient>> clients_;
  std::unique_ptr<GatewayCaptionSource> caption_source_;
  std::size_t rebudgeted_ = 0;
};

std::unique_ptr<ModelClient> Pipeline::make_client(BackendRole role) {
  const auto& endpoint = config_.endpoints.at(role);
  gateway::ClientOptions options;
  options.max_in_flight = config_.max_in_flight;
  options.retry = {config_.retry_base_delay, config_.retry_max_delay};
  options.markers = config_.reasoning_markers;
  options.cache = cache_;
  options.log = hooks_.log;
  auto transport = hooks_.transports.contains(role) ? hooks_.transports.at(role) : gateway::make_transport(endpoint);
  return std::make_unique<ModelClient>(endpoint, std::move(transport), options);
}

void Pipeline::transcribe(VideoWork& work) {
  try {
    work.subtitles = clients_.at(BackendRole::ASR)->transcribe(*work.video);
  } catch (const Error& e) {
    work.failure = std::string("transcription failed: ") + e.what();
    work.failure_is_backend = true;
  }
}

void Pipeline::reduce(VideoWork& work) {
  const auto& video = *work.video;
  ReductionSettings settings;
  settings.context_limit = config_.context_limit;
  settings.initial_clip_length = config_.initial_clip_length;
  settings.time_aware = config_.time_aware;
  settings.prompt_overhead = prompt_overhead(video, *counter_, widest_clip_length(config_, video.duration));
  try {
    auto result = config_.fixed_clip_length
                      ? fixed_length_transcript(video, work.subtitles, *caption_source_, *counter_, settings,
                                                *config_.fixed_clip_length)
                      : adaptive_token_reduction(video, work.subtitles, *caption_source_, *counter_, settings);
    if (config_.drop) {
      result.transcript = drop_transcript_lines(result.transcript, config_.drop->target, config_.drop->rate, *counter_);
    }
    if (result.plan.outcome == BudgetOutcome::QuestionTooLarge) {
      work.failure = "question_too_large: prompt overhead " + std::to_string(settings.prompt_overhead) +
                     " exceeds context limit " + std::to_string(settings.context_limit);
    }
    work.reduction = std::move(result);
  } catch (const Error& e) {
    work.failure = std::string("captioning failed: ") + e.what();
    work.failure_is_backend = true;
  }
}

void Pipeline::answer(std::vector<VideoWork>& works) {
  std::vector<gateway::LLMRequest> requests;
  std::vector<QuestionWork*> targets;
  for (auto& work : works) {
    if (work.resumed || work.failure) continue;
    for (auto& qw : work.questions) {
      qw.transcript = &work.reduction->transcript;
      qw.prompt = render_prompt(*qw.transcript, *qw.question);
      requests.push_back({qw.prompt, config_.temperature, config_.max_output_tokens,
                          gateway::make_request_id(work.video->video_id, qw.question->question_id)});
      targets.push_back(&qw);
    }
  }
  auto& llm = *clients_.at(BackendRole::LLM);
  auto results = gateway::execute_batch(llm, requests, config_.max_in_flight);

  // Requests the backend rejected as too long get one retry with the
  // transcript cut to three quarters of its tokens.
  std::vector<gateway::LLMRequest> retries;
  std::vector<QuestionWork*> retry_targets;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto& entry = results.at(requests[i].request_id);
    auto* qw = targets[i];
    if (entry.ok()) {
      qw->completion = std::move(entry.value);
      continue;
    }
    qw->error_kind = entry.error_kind;
    qw->error = entry.error;
    if (entry.error_kind != ErrorKind::ContextLengthExceeded) continue;
    const auto& transcript = *qw->transcript;
    const auto cut = truncate_to_budget(transcript, *counter_, transcript.token_count * 3 / 4);
    qw->prompt = render_prompt(cut.transcript, *qw->question);
    qw->rebudgeted = true;
    retries.push_back({qw->prompt, config_.temperature, config_.max_output_tokens,
                       gateway::make_request_id(qw->video->video_id, qw->question->question_id, 1)});
    retry_targets.push_back(qw);
  }
  if (retries.empty()) return;
  rebudgeted_ += retries.size();
  log("retrying " + std::to_string(retries.size()) + " prompt(s) with a shortened transcript");
  auto second = gateway::execute_batch(llm, retries, config_.max_in_flight);
  for (std::size_t i = 0; i < retries.size(); ++i) {
    auto& entry = second.at(retries[i].request_id);
    auto* qw = retry_targets[i];
    if (entry.ok()) {
      qw->completion = std::move(entry.value);
      qw->error_kind.reset();
      qw->error.clear();
    } else {
      qw->error_kind = entry.error_kind;
      qw->error = entry.error;
    }
  }
}

void Pipeline::judge(std::vector<VideoWork>& works) {
  auto it = clients_.find(BackendRole::Judge);
  if (it == clients_.end()) return;
  std::vector<gateway::LLMRequest> requests;
  std::vector<QuestionWork*> targets;
  for (auto& work : works) {
    if (work.resumed || work.failure) continue;
    for (auto& qw : work.questions) {
      if (qw.question->kind != QuestionKind::OpenEnded || !qw.completion) continue;
      const auto candidate = clean_open_answer(qw.completion->text);
      if (candidate.empty() || open_answer_matches(candidate, std::get<TextAnswer>(qw.question->ground_truth).text)) {
        continue;
      }
      requests.push_back({judge_prompt(*qw.question, candidate), 0.0, std::nullopt,
                          gateway::make_request_id(work.video->video_id, qw.question->question_id)});
      targets.push_back(&qw);
    }
  }
  auto results = gateway::execute_batch(*it->second, requests, config_.max_in_flight);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto& entry = results.at(requests[i].request_id);
    if (entry.ok()) {
      targets[i]->judge = judge_reply_is_yes(entry.value->text);
    } else {
      log("judge failed for " + requests[i].request_id + ": " + entry.error);
    }
  }
}

void Pipeline::score(VideoWork& work) {
  const auto& video = *work.video;
  for (auto& qw : work.questions) {
    const auto& q = *qw.question;
    if (work.failure) {
      qw.verdict = abstention(video, q, *work.failure, work.failure_is_backend);
    } else if (!qw.completion) {
      qw.verdict = abstention(video, q, std::string(to_string(*qw.error_kind)) + ": " + qw.error, true);
    } else {
      qw.verdict = score_answer(video, q, qw.completion->text, qw.judge);
      if (qw.rebudgeted) {
        qw.verdict.note += std::string(qw.verdict.note.empty() ? "" : "; ") + "answered with a shortened transcript";
      }
    }
  }
}

void Pipeline::persist(const VideoWork& work) {
  json questions = json::array();
  for (const auto& qw : work.questions) {
    json q = {{"question_id", qw.question->question_id}, {"prompt", qw.prompt}, {"rebudgeted", qw.rebudgeted}};
    if (qw.completion) {
      q["raw"] = qw.completion->raw;
      q["answer"] = qw.completion->text;
      q["attempts"] = qw.completion->attempts;
      q["from_cache"] = qw.completion->from_cache;
    }
    if (qw.error_kind) q["error"] = std::string(to_string(*qw.error_kind)) + ": " + qw.error;
    if (qw.judge) q["judge"] = *qw.judge;
    q["verdict"] = to_json(qw.verdict);
    questions.push_back(std::move(q));
  }
  json artifact = {{"schema_version", kArtifactSchemaVersion},
                   {"video_id", work.video->video_id},
                   {"status", "complete"},
                   {"subtitles", subtitles_json(work.subtitles)},
                   {"questions", questions}};
  if (work.reduction) {
    artifact["transcript"] = transcript_json(work.reduction->transcript);
    artifact["budget"] = budget_json(work.reduction->plan);
  }
  if (work.failure) artifact["failure"] = *work.failure;
  gateway::atomic_write(artifact_path(config_.output_dir, work.video->video_id), artifact.dump(2) + "\n");
}

RunResult Pipeline::run() {
  const auto run_start = Clock::now();
  RunStats stats;

  auto stage_start = Clock::now();
  validate(config_);
  config_.manifest_path = std::filesystem::absolute(config_.manifest_path);
  config_.output_dir = std::filesystem::absolute(config_.output_dir);
  if (!config_.cache_root.empty()) config_.cache_root = std::filesystem::absolute(config_.cache_root);
  const auto videos = load_manifest(config_.manifest_path);
  try {
    counter_ = make_counter(config_.counter);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("token counter: ") + e.what());
  }
  std::filesystem::create_directories(config_.output_dir / "videos");
  gateway::atomic_write(config_.output_dir / "config.json", to_json(config_).dump(2) + "\n");
  if (!config_.cache_root.empty()) cache_ = std::make_shared<gateway::ResponseCache>(config_.cache_root);
  for (const auto& [role, _] : config_.endpoints) {
    try {
      clients_[role] = make_client(role);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, std::string(to_string(role)) + " backend: " + e.what());
    }
  }
  auto style = gateway::caption_defaults(config_.caption_style);
  if (config_.caption_prompt) style.prompt = *config_.caption_prompt;
  if (config_.caption_max_new_tokens) style.max_new_tokens = *config_.caption_max_new_tokens;
  caption_source_ =
      std::make_unique<GatewayCaptionSource>(*clients_.at(BackendRole::Captioner), style, config_.max_in_flight);

  std::vector<VideoWork> works(videos.size());
  std::vector<Verdict> resumed_verdicts;
  std::vector<VideoWork*> pending;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    auto& work = works[i];
    work.video = &videos[i];
    for (const auto& q : videos[i].questions) {
      QuestionWork qw;
      qw.question = &q;
      qw.video = &videos[i];
      work.questions.push_back(std::move(qw));
    }
    if (config_.resume) {
      if (auto verdicts = load_complete_artifact(artifact_path(config_.output_dir, videos[i].video_id), videos[i])) {
        work.resumed = true;
        for (std::size_t k = 0; k < verdicts->size(); ++k) work.questions[k].verdict = std::move((*verdicts)[k]);
        ++stats.videos_resumed;
        continue;
      }
    }
    pending.push_back(&work);
  }
  log("run '" + config_.label + "': " + std::to_string(videos.size()) + " video(s), " +
      std::to_string(stats.videos_resumed) + " resumed");
  stats.timing.load = seconds_since(stage_start);

  stage_start = Clock::now();
  gateway::run_bounded(pending.size(), config_.video_parallelism, [&](std::size_t i) { transcribe(*pending[i]); });
  stats.timing.transcribe = seconds_since(stage_start);

  stage_start = Clock::now();
  gateway::run_bounded(pending.size(), config_.video_parallelism, [&](std::size_t i) {
    if (!pending[i]->failure) reduce(*pending[i]);
  });
  stats.timing.reduce = seconds_since(stage_start);

  stage_start = Clock::now();
  answer(works);
  stats.timing.answer = seconds_since(stage_start);

  stage_start = Clock::now();
  judge(works);
  for (auto* work : pending) score(*work);
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> labels;
  for (const auto& work : works) {
    for (const auto& qw : work.questions) {
      verdicts.push_back(qw.verdict);
      if (auto it = work.video->category_labels.find(qw.question->question_id);
          it != work.video->category_labels.end()) {
        labels[qw.verdict.key()] = it->second;
      }
    }
  }
  RunResult result;
  if (!verdicts.empty()) result.report = build_report(std::move(verdicts), labels);
  stats.timing.score = seconds_since(stage_start);

  stage_start = Clock::now();
  for (auto* work : pending) persist(*work);
  if (!result.report.verdicts.empty()) {
    gateway::atomic_write(config_.output_dir / "report.jsonl", report_jsonl(result.report));
    gateway::atomic_write(config_.output_dir / "report.txt", report_table(result.report));
  }
  stats.timing.persist = seconds_since(stage_start);

  stats.videos = videos.size();
  stats.questions = result.report.verdicts.size();
  stats.rebudgeted = rebudgeted_;
  for (const auto& [role, client] : clients_) {
    const auto s = client->stats();
    RoleStats rs{s.network_calls, s.cache_hits, s.retries, std::nullopt};
    if (auto* mock = dynamic_cast<gateway::MockTransport*>(&client->transport())) {
      rs.peak_in_flight = mock->stats().peak_in_flight;
    }
    stats.roles[role] = rs;
  }
  stats.timing.total = seconds_since(run_start);
  gateway::atomic_write(config_.output_dir / "run_stats.json", to_json(stats).dump(2) + "\n");

  const auto& counts = result.report.counts;
  result.over_failure_budget =
      counts.total > 0 && static_cast<double>(counts.failures) > config_.failure_budget * static_cast<double>(counts.total);
  if (result.over_failure_budget) {
    log(std::to_string(counts.failures) + " of " + std::to_string(counts.total) +
        " question(s) failed, above the failure budget");
  }
  result.stats = std::move(stats);
  result.output_dir = config_.output_dir;
  return result;
}

std::string format_optional_percent(const std::optional<double>& value) {
  if (!value) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *value);
  return buf;
}

// Variant configs with the fields an ablation may vary removed.
json ablation_invariant_part(const RunConfig& config) {
  auto j = to_json(config);
  for (const char* key : {"label", "output_dir", "fixed_clip_length", "initial_clip_length", "drop", "resume"}) {
    j.erase(key);
  }
  return j;
}

}  // namespace

RunResult run_pipeline(const RunConfig& config, const RunHooks& hooks) { return Pipeline(config, hooks).run(); }

std::string ablation_table(const std::vector<AblationRow>& rows, const std::vector<RunConfig>& variants) {
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back({"variant", "clip length", "drop", "accuracy", "mIoU", "abstentions"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& c = variants.at(i);
    const auto& report = rows[i].result.report;
    const std::string clip = c.fixed_clip_length ? format_clip_length(*c.fixed_clip_length) + " s fixed"
                                                 : "adaptive from " + format_clip_length(c.initial_clip_length) + " s";
    std::string drop = "-";
    if (c.drop) drop = std::string(to_string(c.drop->target)) + " " + format_optional_percent(100.0 * c.drop->rate) + "%";
    cells.push_back({rows[i].label, clip, drop, format_optional_percent(report.accuracy_overall),
                     format_optional_percent(report.miou), std::to_string(report.counts.abstentions)});
  }
  std::array<std::size_t, 6> width{};
  for (const auto& row : cells) {
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t k = 0; k < cells[r].size(); ++k) {
      out += cells[r][k];
      if (k + 1 < cells[r].size()) out += std::string(width[k] - cells[r][k].size() + 2, ' ');
    }
    out += "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

AblationResult run_ablation(const std::vector<RunConfig>& variants, const RunHooks& hooks) {
  if (variants.empty()) throw Error(ErrorKind::ConfigError, "ablation needs at least one variant");
  std::set<std::string> labels;
  const auto reference = ablation_invariant_part(variants.front());
  for (const auto& v : variants) {
    validate(v);
    if (!labels.insert(v.label).second) throw Error(ErrorKind::ConfigError, "duplicate variant label '" + v.label + "'");
    if (ablation_invariant_part(v) != reference) {
      throw Error(ErrorKind::ConfigError,
                  "variant '" + v.label + "' differs from '" + variants.front().label +
                      "' outside the clip-length and drop settings");
    }
  }
  AblationResult out;
  for (const auto& v : variants) {
    RunConfig config = v;
    config.output_dir = v.output_dir / v.label;
    out.rows.push_back({v.label, run_pipeline(config, hooks)});
  }
  out.table = ablation_table(out.rows, variants);
  return out;
}

EvalReport rescore_run(const std::filesystem::path& run_dir) {
  const auto config = run_config_from_json(read_json(run_dir / "config.json"));
  const auto videos = load_manifest(config.manifest_path);
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> labels;
  for (const auto& video : videos) {
    const auto path = artifact_path(run_dir, video.video_id);
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorKind::IoError, "run is missing the artifact for video " + video.video_id);
    }
    const auto artifact = read_json(path);
    std::map<std::string, json> stored;
    for (const auto& q : artifact.at("questions")) stored[q.at("question_id").get<std::string>()] = q;
    for (const auto& q : video.questions) {
      auto it = stored.find(q.question_id);
      if (it == stored.end()) {
        throw Error(ErrorKind::IoError, "artifact " + path.string() + " lacks question " + q.question_id);
      }
      const auto& record = it->second;
      Verdict v;
      if (record.contains("answer")) {
        std::optional<bool> judge;
        if (record.contains("judge")) judge = record["judge"].get<bool>();
        v = score_answer(video, q, record["answer"].get<std::string>(), judge);
        if (record.value("rebudgeted", false)) {
          v.note += std::string(v.note.empty() ? "" : "; ") + "answered with a shortened transcript";
        }
      } else {
        v = verdict_from_json(record.at("verdict"));
      }
      if (auto label = video.category_labels.find(q.question_id); label != video.category_labels.end()) {
        labels[v.key()] = label->second;
      }
      verdicts.push_back(std::move(v));
    }
  }
  return build_report(std::move(verdicts), labels);
}

std::string inspect_video(const std::filesystem::path& run_dir, const std::string& video_id,
                          const std::optional<std::string>& question_id) {
  const auto path = artifact_path(run_dir, video_id);
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::IoError, "no artifact for video " + video_id);
  const auto artifact = read_json(path);
  std::ostringstream out;
  out << "video " << video_id << "\n";
  if (artifact.contains("failure")) out << "failure: " << artifact["failure"].get<std::string>() << "\n";
  if (artifact.contains("budget")) {
    const auto& b = artifact["budget"];
    out << "budget: outcome " << b["outcome"].get<std::string>() << ", limit " << b["context_limit"] << ", overhead "
        << b["prompt_overhead"] << ", final clip length " << b["final_clip_length"] << ", tokens "
        << b["final_token_count"] << "\n";
    for (const auto& step : b["trace"]) out << "  L=" << step["clip_length"] << " tokens=" << step["tokens"] << "\n";
  }
  if (!question_id) {
    if (artifact.contains("transcript")) out << "transcript:\n" << artifact["transcript"]["full_text"].get<std::string>() << "\n";
    for (const auto& q : artifact.at("questions")) {
      const auto v = verdict_from_json(q.at("verdict"));
      out << v.question_id << ": predicted '" << v.predicted << "', gold '" << v.gold << "'"
          << (v.abstained ? " (abstained)" : v.correct ? " (correct)" : "") << (v.note.empty() ? "" : "; " + v.note)
          << "\n";
    }
    return out.str();
  }
  for (const auto& q : artifact.at("questions")) {
    if (q.at("question_id").get<std::string>() != *question_id) continue;
    out << "prompt:\n" << q.value("prompt", std::string()) << "\n\nraw output:\n" << q.value("raw", std::string())
        << "\n\nverdict: " << q.at("verdict").dump() << "\n";
    return out.str();
  }
  throw Error(ErrorKind::IoError, "video " + video_id + " has no question " + *question_id);
}

}  // namespace vidreason
