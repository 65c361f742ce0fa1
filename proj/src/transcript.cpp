#include "vidreason/transcript.hpp"

#include <cmath>
#include <cstdio>

#include "text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

ClipPlan plan_clips(double duration, double clip_length) {
  if (!(duration > 0.0) || !(clip_length > 0.0)) {
    throw Error(ErrorKind::NonPositiveInput, "duration and clip length must be positive (got " +
                                                 detail::format_seconds(duration) + ", " +
                                                 detail::format_seconds(clip_length) + ")");
  }
  auto count = static_cast<std::size_t>(std::ceil(duration / clip_length));
  // Rounding in the division can leave an empty trailing clip.
  while (count > 1 && static_cast<double>(count - 1) * clip_length >= duration) --count;
  if (count == 0) count = 1;

  ClipPlan plan;
  plan.clip_length = clip_length;
  plan.clips.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double start = static_cast<double>(i) * clip_length;
    const double end = (i + 1 == count) ? duration : static_cast<double>(i + 1) * clip_length;
    plan.clips.push_back({start, end});
  }
  return plan;
}

std::string render_timestamp(double seconds) {
  if (!(seconds >= 0.0)) throw Error(ErrorKind::NegativeTime, "timestamp " + detail::format_seconds(seconds));
  const auto total = static_cast<unsigned long long>(std::floor(seconds));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%02llu:%02llu:%02llu", total / 3600, (total / 60) % 60, total % 60);
  return buf;
}

std::string render_timed_line(double start, double end, std::string_view text, bool time_aware) {
  if (!time_aware) return std::string(text);
  std::string line = render_timestamp(start);
  line += " --> ";
  line += render_timestamp(end);
  line += ": ";
  line += text;
  return line;
}

std::vector<std::string> render_caption_lines(const std::vector<ClipCaption>& captions, bool time_aware) {
  std::vector<std::string> lines;
  lines.reserve(captions.size());
  for (const auto& c : captions) lines.push_back(render_timed_line(c.start, c.end, c.text, time_aware));
  return lines;
}

std::vector<std::string> render_subtitle_lines(const std::vector<SubtitleSegment>& subtitles) {
  std::vector<std::string> lines;
  lines.reserve(subtitles.size());
  for (const auto& s : subtitles) lines.push_back(render_timed_line(s.start, s.end, s.text, true));
  return lines;
}

std::string render_caption_block(const std::vector<ClipCaption>& captions, bool time_aware) {
  return detail::join(render_caption_lines(captions, time_aware), "\n");
}

Transcript assemble_transcript(std::vector<std::string> subtitle_lines, std::vector<std::string> caption_lines,
                               double clip_length, const TokenCounter& counter) {
  Transcript t;
  t.subtitle_block = detail::join(subtitle_lines, "\n");
  t.caption_block = detail::join(caption_lines, "\n");
  t.subtitle_lines = std::move(subtitle_lines);
  t.caption_lines = std::move(caption_lines);
  t.clip_length = clip_length;
  t.full_text = t.subtitle_block;
  if (!t.subtitle_block.empty() && !t.caption_block.empty()) t.full_text += '\n';
  t.full_text += t.caption_block;
  t.token_count = counter.count(t.full_text);
  return t;
}

Transcript build_transcript(const std::vector<SubtitleSegment>& subtitles, const std::vector<ClipCaption>& captions,
                            double clip_length, const TokenCounter& counter, bool time_aware) {
  return assemble_transcript(render_subtitle_lines(subtitles), render_caption_lines(captions, time_aware),
                             clip_length, counter);
}

}  // namespace vidreason
