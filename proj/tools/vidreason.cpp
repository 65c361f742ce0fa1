// Command-line front end: run, ablate, score, inspect.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidreason/error.hpp"
#include "vidreason/pipeline.hpp"
#include "vidreason/run_config.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vidreason::Error(vidreason::ErrorKind::ConfigError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw vidreason::Error(vidreason::ErrorKind::ConfigError, path + " is not valid JSON: " + e.what());
  }
}

// Command-line values that override the config file, keyed like the file.
struct Overrides {
  std::string manifest, output_dir, cache_root, label;
  std::string captioner_url, asr_url, llm_url, judge_url;
  std::optional<std::size_t> context_limit, max_in_flight, video_parallelism;
  std::optional<double> initial_clip_length, fixed_clip_length, temperature, failure_budget;
  std::string drop_target;
  std::optional<double> drop_rate;
  std::optional<bool> time_aware;
  bool resume = false;

  void add_to(CLI::App& app) {
    app.add_option("--manifest", manifest, "Manifest file (JSON lines)");
    app.add_option("--output-dir", output_dir, "Run output directory");
    app.add_option("--cache-root", cache_root, "Response cache directory");
    app.add_option("--label", label, "Run label");
    app.add_option("--captioner-url", captioner_url, "Captioner base URL or mock:<profile>");
    app.add_option("--asr-url", asr_url, "Speech recognition base URL or mock:<profile>");
    app.add_option("--llm-url", llm_url, "Reasoning model base URL or mock:<profile>");
    app.add_option("--judge-url", judge_url, "Optional open-ended answer judge");
    app.add_option("--context-limit", context_limit, "Reasoning model context limit in tokens");
    app.add_option("--initial-clip-length", initial_clip_length, "First clip length of adaptive reduction (s)");
    app.add_option("--fixed-clip-length", fixed_clip_length, "Caption at one fixed clip length (s)");
    app.add_option("--drop-target", drop_target, "Transcript block to thin out")
        ->check(CLI::IsMember({"subtitles", "captions"}));
    app.add_option("--drop-rate", drop_rate, "Fraction of lines to drop, in [0, 1)");
    app.add_option("--time-aware", time_aware, "Timestamp caption lines (true/false)");
    app.add_option("--max-in-flight", max_in_flight, "Concurrent requests per backend");
    app.add_option("--video-parallelism", video_parallelism, "Videos processed concurrently");
    app.add_option("--temperature", temperature, "Sampling temperature of the reasoning model");
    app.add_option("--failure-budget", failure_budget, "Tolerated fraction of failed questions");
    app.add_flag("--resume", resume, "Reuse complete per-video artifacts");
  }

  void apply(json& j) const {
    // Paths given on the command line are relative to the working directory.
    auto set_path = [&j](const char* key, const std::string& value) {
      if (!value.empty()) j[key] = std::filesystem::absolute(value).string();
    };
    set_path("manifest", manifest);
    set_path("output_dir", output_dir);
    set_path("cache_root", cache_root);
    if (!label.empty()) j["label"] = label;
    if (!j.contains("endpoints")) j["endpoints"] = json::object();
    auto set_url = [&j](const char* role, const std::string& url) {
      if (!url.empty()) j["endpoints"][role]["base_url"] = url;
    };
    set_url("captioner", captioner_url);
    set_url("asr", asr_url);
    set_url("llm", llm_url);
    set_url("judge", judge_url);
    if (context_limit) j["context_limit"] = *context_limit;
    if (initial_clip_length) j["initial_clip_length"] = *initial_clip_length;
    if (fixed_clip_length) j["fixed_clip_length"] = *fixed_clip_length;
    if (!drop_target.empty() || drop_rate) {
      json drop = j.value("drop", json::object());
      if (drop.is_null()) drop = json::object();
      if (!drop_target.empty()) drop["target"] = drop_target;
      if (drop_rate) drop["rate"] = *drop_rate;
      j["drop"] = drop;
    }
    if (time_aware) j["time_aware"] = *time_aware;
    if (max_in_flight) j["max_in_flight"] = *max_in_flight;
    if (video_parallelism) j["video_parallelism"] = *video_parallelism;
    if (temperature) j["temperature"] = *temperature;
    if (failure_budget) j["failure_budget"] = *failure_budget;
    if (resume) j["resume"] = true;
  }
};

std::function<void(const std::string&)> stderr_logger(bool quiet) {
  if (quiet) return {};
  static std::mutex mutex;
  return [](const std::string& line) {
    std::lock_guard lock(mutex);
    std::fprintf(stderr, "[vidreason] %s\n", line.c_str());
  };
}

int exit_code_for(const vidreason::RunResult& result) {
  return result.over_failure_budget ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video question answering over language transcripts"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress logging");

  auto* run = app.add_subcommand("run", "Evaluate one configuration");
  std::string run_config_path;
  run->add_option("-c,--config", run_config_path, "Run config file (JSON)");
  Overrides run_overrides;
  run_overrides.add_to(*run);

  auto* ablate = app.add_subcommand("ablate", "Run configuration variants and compare them");
  std::string ablation_path;
  ablate->add_option("-c,--config", ablation_path, "Ablation file: {\"base\": config, \"variants\": [patch, ...]}")
      ->required();
  Overrides ablate_overrides;
  ablate_overrides.add_to(*ablate);

  auto* score = app.add_subcommand("score", "Re-score the stored outputs of a run");
  std::string score_dir;
  bool score_jsonl = false;
  score->add_option("--run-dir", score_dir, "Run output directory")->required();
  score->add_flag("--jsonl", score_jsonl, "Print report records instead of the table");

  auto* inspect = app.add_subcommand("inspect", "Print a stored transcript, budget trace or prompt");
  std::string inspect_dir, inspect_video_id, inspect_question;
  inspect->add_option("--run-dir", inspect_dir, "Run output directory")->required();
  inspect->add_option("--video", inspect_video_id, "Video id")->required();
  inspect->add_option("--question", inspect_question, "Question id");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  vidreason::RunHooks hooks;
  hooks.log = stderr_logger(quiet);
  try {
    if (*run) {
      json j = run_config_path.empty() ? json::object() : read_json_file(run_config_path);
      run_overrides.apply(j);
      const auto base = run_config_path.empty() ? std::filesystem::path()
                                                : std::filesystem::path(run_config_path).parent_path();
      const auto config = vidreason::run_config_from_json(j, base);
      const auto result = vidreason::run_pipeline(config, hooks);
      std::cout << vidreason::report_table(result.report);
      return exit_code_for(result);
    }
    if (*ablate) {
      const auto doc = read_json_file(ablation_path);
      if (!doc.contains("base") || !doc.contains("variants") || !doc["variants"].is_array()) {
        throw vidreason::Error(vidreason::ErrorKind::ConfigError, "ablation file needs 'base' and 'variants'");
      }
      const auto base_dir = std::filesystem::path(ablation_path).parent_path();
      std::vector<vidreason::RunConfig> variants;
      for (const auto& patch : doc["variants"]) {
        json j = doc["base"];
        ablate_overrides.apply(j);
        j.merge_patch(patch);
        variants.push_back(vidreason::run_config_from_json(j, base_dir));
      }
      const auto result = vidreason::run_ablation(variants, hooks);
      std::cout << result.table;
      for (const auto& row : result.rows) {
        if (row.result.over_failure_budget) return kExitPartial;
      }
      return kExitOk;
    }
    if (*score) {
      const auto report = vidreason::rescore_run(score_dir);
      std::cout << (score_jsonl ? vidreason::report_jsonl(report) : vidreason::report_table(report));
      return kExitOk;
    }
    if (*inspect) {
      std::cout << vidreason::inspect_video(inspect_dir, inspect_video_id,
                                            inspect_question.empty() ? std::nullopt
                                                                     : std::optional<std::string>(inspect_question));
      return kExitOk;
    }
  } catch (const vidreason::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
