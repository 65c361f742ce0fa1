#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "vidreason/gateway/client.hpp"
#include "vidreason/gateway/types.hpp"
#include "vidreason/token_budget.hpp"
#include "vidreason/token_counter.hpp"

namespace vidreason {

struct CounterSpec {
  TokenCounter::Kind kind = TokenCounter::Kind::HeuristicCharQuarter;
  /// Merges file for the vocabulary counter.
  std::filesystem::path vocabulary;
};

TokenCounter make_counter(const CounterSpec& spec);

struct DropSpec {
  DropTarget target = DropTarget::Subtitles;
  double rate = 0.0;
  friend bool operator==(const DropSpec&, const DropSpec&) = default;
};

/// Everything needed to reproduce one evaluation run.
struct RunConfig {
  /// Names the run in ablation tables.
  std::string label = "run";
  std::filesystem::path manifest_path;
  std::map<gateway::BackendRole, gateway::BackendEndpoint> endpoints;
  gateway::CaptionStyle caption_style = gateway::CaptionStyle::Nvila;
  /// Overrides the style's caption prompt / token limit when set.
  std::optional<std::string> caption_prompt;
  std::optional<int> caption_max_new_tokens;
  CounterSpec counter;
  std::size_t context_limit = 65536;
  double initial_clip_length = 1.0;
  /// Static clip length; when set, adaptive reduction is off.
  std::optional<double> fixed_clip_length;
  std::optional<DropSpec> drop;
  bool time_aware = true;
  std::size_t max_in_flight = gateway::kDefaultMaxInFlight;
  /// Videos processed concurrently.
  std::size_t video_parallelism = 4;
  double temperature = gateway::kDefaultTemperature;
  std::optional<int> max_output_tokens;
  std::optional<gateway::ReasoningMarkers> reasoning_markers = gateway::ReasoningMarkers{};
  std::chrono::milliseconds retry_base_delay{500};
  std::chrono::milliseconds retry_max_delay{8000};
  /// Empty disables the response cache.
  std::filesystem::path cache_root;
  std::filesystem::path output_dir;
  bool resume = false;
  /// Largest tolerated fraction of questions lost to backend failures.
  double failure_budget = 0.1;
};

/// Throws Error(ConfigError) naming the offending field.
void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);
/// Relative paths are resolved against `base_dir`. Unknown keys are
/// rejected. Throws Error(ConfigError).
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vidreason
