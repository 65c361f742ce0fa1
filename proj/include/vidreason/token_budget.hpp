#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vidreason/manifest.hpp"
#include "vidreason/token_counter.hpp"
#include "vidreason/transcript.hpp"

namespace vidreason {

/// Supplies one caption per planned clip, in plan order. Implementations
/// signal failures with Error(CaptionSourceFailure) naming the clip.
class CaptionSource {
 public:
  virtual ~CaptionSource() = default;
  virtual std::vector<ClipCaption> captions(const VideoManifest& video, const ClipPlan& plan) = 0;
};

enum class BudgetOutcome { Fit, FitAfterTruncation, QuestionTooLarge };
std::string_view to_string(BudgetOutcome outcome);

struct BudgetStep {
  double clip_length = 0.0;
  std::size_t token_count = 0;
  friend bool operator==(const BudgetStep&, const BudgetStep&) = default;
};

struct BudgetPlan {
  double initial_clip_length = 0.0;
  double final_clip_length = 0.0;
  std::size_t context_limit = 0;
  std::size_t prompt_overhead = 0;
  std::size_t final_token_count = 0;
  /// One entry per loop iteration; clip lengths double from entry to entry.
  std::vector<BudgetStep> trace;
  BudgetOutcome outcome = BudgetOutcome::Fit;
  std::size_t dropped_caption_lines = 0;
  std::size_t dropped_subtitle_lines = 0;
};

struct ReductionSettings {
  std::size_t context_limit = 65536;
  double initial_clip_length = 1.0;
  /// Tokens of the prompt around the transcript (template and question).
  std::size_t prompt_overhead = 0;
  bool time_aware = true;
};

struct ReductionResult {
  Transcript transcript;
  BudgetPlan plan;
};

/// Adaptive token reduction: starting from the initial clip length, caption
/// the video, fuse with the subtitles and double the clip length until the
/// transcript plus prompt overhead fits the context limit. Growth stops at
/// the first length covering the whole video; if that still does not fit,
/// caption lines and then subtitle lines are truncated middle-out.
ReductionResult adaptive_token_reduction(const VideoManifest& video, const std::vector<SubtitleSegment>& subtitles,
                                         CaptionSource& captions, const TokenCounter& counter,
                                         const ReductionSettings& settings);

/// Static clip-length baseline: one captioning pass at `clip_length`, with the
/// same truncation fallback when over budget. The trace has one entry.
ReductionResult fixed_length_transcript(const VideoManifest& video, const std::vector<SubtitleSegment>& subtitles,
                                        CaptionSource& captions, const TokenCounter& counter,
                                        const ReductionSettings& settings, double clip_length);

/// Removal order for truncation: interior lines nearest the centre first,
/// then the last line, then the first.
std::vector<std::size_t> middle_out_order(std::size_t n);

struct TruncationResult {
  Transcript transcript;
  std::size_t dropped_caption_lines = 0;
  std::size_t dropped_subtitle_lines = 0;
};

/// Drops caption lines, then subtitle lines, middle-out until the transcript
/// token count is at most `transcript_budget`.
TruncationResult truncate_to_budget(const Transcript& transcript, const TokenCounter& counter,
                                    std::size_t transcript_budget);

enum class DropTarget { Subtitles, Captions };
std::string_view to_string(DropTarget target);

/// Uniform-stride line dropping: keeps line i iff
/// floor(i * (1 - rate)) > floor((i - 1) * (1 - rate)).
/// Throws Error(InvalidRate) unless 0 <= rate < 1.
std::vector<std::string> drop_lines(const std::vector<std::string>& lines, double rate);

/// Applies drop_lines to one block of a transcript and recounts tokens.
Transcript drop_transcript_lines(const Transcript& transcript, DropTarget target, double rate,
                                 const TokenCounter& counter);

}  // namespace vidreason
