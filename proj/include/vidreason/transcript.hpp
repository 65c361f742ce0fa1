#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vidreason/manifest.hpp"
#include "vidreason/token_counter.hpp"

namespace vidreason {

/// Non-overlapping clips tiling [0, duration]; all clips but the last have
/// exactly `clip_length` seconds, the last may be shorter.
struct ClipPlan {
  double clip_length = 0.0;
  std::vector<TimeInterval> clips;
};

/// Throws Error(NonPositiveInput) unless both arguments are positive.
ClipPlan plan_clips(double duration, double clip_length);

/// Floor of `seconds` as zero-padded "HH:MM:SS" (hours grow past two digits).
/// Throws Error(NegativeTime) for t < 0.
std::string render_timestamp(double seconds);

/// "HH:MM:SS --> HH:MM:SS: text", or bare text when `time_aware` is false.
std::string render_timed_line(double start, double end, std::string_view text, bool time_aware);

std::vector<std::string> render_caption_lines(const std::vector<ClipCaption>& captions, bool time_aware);
std::vector<std::string> render_subtitle_lines(const std::vector<SubtitleSegment>& subtitles);

std::string render_caption_block(const std::vector<ClipCaption>& captions, bool time_aware);

/// The fused text description fed to the reasoning model.
struct Transcript {
  std::vector<std::string> subtitle_lines;
  std::vector<std::string> caption_lines;
  std::string subtitle_block;
  std::string caption_block;
  double clip_length = 0.0;
  /// subtitle_block, then caption_block, separated by one newline when both
  /// are non-empty.
  std::string full_text;
  std::size_t token_count = 0;
};

/// Builds the transcript from pre-rendered lines (used after dropping or
/// truncating lines).
Transcript assemble_transcript(std::vector<std::string> subtitle_lines, std::vector<std::string> caption_lines,
                               double clip_length, const TokenCounter& counter);

/// Subtitles are always rendered with timestamps; `time_aware` switches the
/// caption timestamps on or off.
Transcript build_transcript(const std::vector<SubtitleSegment>& subtitles, const std::vector<ClipCaption>& captions,
                            double clip_length, const TokenCounter& counter, bool time_aware = true);

}  // namespace vidreason
