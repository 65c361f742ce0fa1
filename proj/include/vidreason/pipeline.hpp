#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidreason/eval.hpp"
#include "vidreason/gateway/client.hpp"
#include "vidreason/run_config.hpp"
#include "vidreason/token_budget.hpp"

namespace vidreason {

inline constexpr int kArtifactSchemaVersion = 1;

/// Captions every planned clip through a captioner client.
class GatewayCaptionSource : public CaptionSource {
 public:
  GatewayCaptionSource(gateway::ModelClient& client, gateway::CaptionDefaults prompt, std::size_t max_in_flight);
  std::vector<ClipCaption> captions(const VideoManifest& video, const ClipPlan& plan) override;

 private:
  gateway::ModelClient& client_;
  gateway::CaptionDefaults prompt_;
  std::size_t max_in_flight_;
};

/// Wall-clock seconds per pipeline stage. The stages run one after another
/// over all videos, so their sum is the run total up to bookkeeping.
struct StageTiming {
  double load = 0.0;
  double transcribe = 0.0;
  double reduce = 0.0;
  double answer = 0.0;
  double score = 0.0;
  double persist = 0.0;
  double total = 0.0;

  double stage_sum() const { return load + transcribe + reduce + answer + score + persist; }
};

struct RoleStats {
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
  /// Only known for in-process mock backends.
  std::optional<std::size_t> peak_in_flight;
};

struct RunStats {
  std::map<gateway::BackendRole, RoleStats> roles;
  std::size_t videos = 0;
  std::size_t videos_resumed = 0;
  std::size_t questions = 0;
  std::size_t rebudgeted = 0;
  StageTiming timing;

  std::size_t network_calls() const;
};

nlohmann::json to_json(const RunStats& stats);

struct RunResult {
  EvalReport report;
  RunStats stats;
  std::filesystem::path output_dir;
  /// Backend failures exceeded config.failure_budget.
  bool over_failure_budget = false;
};

/// Test and embedding hooks. A transport given here replaces the one the
/// endpoint URL would select.
struct RunHooks {
  std::map<gateway::BackendRole, std::shared_ptr<gateway::Transport>> transports;
  std::function<void(const std::string&)> log;
};

/// Transcribe, reduce, prompt, complete, parse, score and persist.
///
/// Output layout under config.output_dir:
///   config.json           config snapshot
///   videos/<id>.json      transcript, budget plan and per-question records
///   report.jsonl          verdict records plus the aggregate record
///   report.txt            summary table
///   run_stats.json        timing and network counters
///
/// With config.resume, videos whose artifact is complete are loaded instead
/// of recomputed. Only configuration and manifest problems throw; backend
/// failures become abstentions.
RunResult run_pipeline(const RunConfig& config, const RunHooks& hooks = {});

/// Scores one model answer against the question's gold answer.
/// `judge_says` is consulted for open-ended questions that do not match
/// exactly.
Verdict score_answer(const VideoManifest& video, const Question& question, const std::string& answer_text,
                     std::optional<bool> judge_says = std::nullopt);

/// Verdict for a question that never produced an answer.
Verdict abstention(const VideoManifest& video, const Question& question, std::string note, bool failed);

struct AblationRow {
  std::string label;
  RunResult result;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  /// Merged comparison table keyed by variant label.
  std::string table;
};

/// Runs each variant into <output_dir>/<label>. Variants may differ only in
/// clip-length and drop settings (and label/output_dir); labels must be
/// unique. Throws Error(ConfigError) for an empty or inconsistent list.
AblationResult run_ablation(const std::vector<RunConfig>& variants, const RunHooks& hooks = {});

std::string ablation_table(const std::vector<AblationRow>& rows, const std::vector<RunConfig>& variants);

/// Re-parses the stored raw outputs of a finished run against its manifest
/// and rebuilds the report without contacting any backend.
EvalReport rescore_run(const std::filesystem::path& run_dir);

/// Human-readable dump of one stored video artifact: budget trace, transcript
/// and, optionally, one question's prompt and raw output.
std::string inspect_video(const std::filesystem::path& run_dir, const std::string& video_id,
                          const std::optional<std::string>& question_id = std::nullopt);

}  // namespace vidreason
