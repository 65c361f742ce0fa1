#include "vidreason/token_budget.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

std::string_view to_string(BudgetOutcome outcome) {
  switch (outcome) {
    case BudgetOutcome::Fit: return "fit";
    case BudgetOutcome::FitAfterTruncation: return "fit_after_truncation";
    case BudgetOutcome::QuestionTooLarge: return "question_too_large";
  }
  return "unknown";
}

std::string_view to_string(DropTarget target) {
  return target == DropTarget::Subtitles ? "subtitles" : "captions";
}

namespace {

std::vector<ClipCaption> fetch_captions(CaptionSource& source, const VideoManifest& video, const ClipPlan& plan) {
  auto captions = source.captions(video, plan);
  if (captions.size() != plan.clips.size()) {
    throw Error(ErrorKind::CaptionSourceFailure, "video '" + video.video_id + "': expected " +
                                                     std::to_string(plan.clips.size()) + " captions, got " +
                                                     std::to_string(captions.size()));
  }
  return captions;
}

std::vector<std::string> without(const std::vector<std::string>& lines, const std::vector<std::size_t>& order,
                                 std::size_t removed) {
  std::vector<bool> drop(lines.size(), false);
  for (std::size_t i = 0; i < removed; ++i) drop[order[i]] = true;
  std::vector<std::string> out;
  out.reserve(lines.size() - removed);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!drop[i]) out.push_back(lines[i]);
  }
  return out;
}

ReductionResult question_too_large(const ReductionSettings& settings, double clip_length) {
  ReductionResult result;
  result.transcript.clip_length = clip_length;
  auto& plan = result.plan;
  plan.initial_clip_length = settings.initial_clip_length;
  plan.final_clip_length = clip_length;
  plan.context_limit = settings.context_limit;
  plan.prompt_overhead = settings.prompt_overhead;
  plan.outcome = BudgetOutcome::QuestionTooLarge;
  return result;
}

// Fills the final fields of `result` once the loop has settled on a transcript.
void settle(ReductionResult& result, Transcript transcript, const TokenCounter& counter,
            const ReductionSettings& settings) {
  auto& plan = result.plan;
  const std::size_t budget = settings.context_limit - settings.prompt_overhead;
  if (transcript.token_count <= budget) {
    plan.outcome = BudgetOutcome::Fit;
    result.transcript = std::move(transcript);
  } else {
    auto truncated = truncate_to_budget(transcript, counter, budget);
    plan.outcome = BudgetOutcome::FitAfterTruncation;
    plan.dropped_caption_lines = truncated.dropped_caption_lines;
    plan.dropped_subtitle_lines = truncated.dropped_subtitle_lines;
    result.transcript = std::move(truncated.transcript);
  }
  plan.final_clip_length = result.transcript.clip_length;
  plan.final_token_count = result.transcript.token_count;
}

}  // namespace

ReductionResult adaptive_token_reduction(const VideoManifest& video, const std::vector<SubtitleSegment>& subtitles,
                                         CaptionSource& captions, const TokenCounter& counter,
                                         const ReductionSettings& settings) {
  if (!(settings.initial_clip_length > 0.0)) {
    throw Error(ErrorKind::NonPositiveInput, "initial clip length must be positive");
  }
  if (settings.prompt_overhead > settings.context_limit) {
    return question_too_large(settings, settings.initial_clip_length);
  }
  const std::size_t budget = settings.context_limit - settings.prompt_overhead;
  const auto subtitle_lines = render_subtitle_lines(subtitles);

  ReductionResult result;
  result.plan.initial_clip_length = settings.initial_clip_length;
  result.plan.context_limit = settings.context_limit;
  result.plan.prompt_overhead = settings.prompt_overhead;

  double clip_length = settings.initial_clip_length;
  while (true) {
    const ClipPlan clips = plan_clips(video.duration, clip_length);
    const auto caption_list = fetch_captions(captions, video, clips);
    Transcript transcript = assemble_transcript(subtitle_lines, render_caption_lines(caption_list, settings.time_aware),
                                                clip_length, counter);
    result.plan.trace.push_back({clip_length, transcript.token_count});
    if (transcript.token_count <= budget || clip_length >= video.duration) {
      settle(result, std::move(transcript), counter, settings);
      return result;
    }
    clip_length *= 2.0;
  }
}

ReductionResult fixed_length_transcript(const VideoManifest& video, const std::vector<SubtitleSegment>& subtitles,
                                        CaptionSource& captions, const TokenCounter& counter,
                                        const ReductionSettings& settings, double clip_length) {
  if (settings.prompt_overhead > settings.context_limit) return question_too_large(settings, clip_length);
  const ClipPlan clips = plan_clips(video.duration, clip_length);
  const auto caption_list = fetch_captions(captions, video, clips);
  Transcript transcript = build_transcript(subtitles, caption_list, clip_length, counter, settings.time_aware);

  ReductionResult result;
  result.plan.initial_clip_length = clip_length;
  result.plan.context_limit = settings.context_limit;
  result.plan.prompt_overhead = settings.prompt_overhead;
  result.plan.trace.push_back({clip_length, transcript.token_count});
  settle(result, std::move(transcript), counter, settings);
  return result;
}

std::vector<std::size_t> middle_out_order(std::size_t n) {
  std::vector<std::size_t> order;
  if (n == 0) return order;
  if (n >= 3) {
    order.resize(n - 2);
    std::iota(order.begin(), order.end(), std::size_t{1});
    const double centre = static_cast<double>(n - 1) / 2.0;
    std::stable_sort(order.begin(), order.end(), [centre](std::size_t a, std::size_t b) {
      return std::abs(static_cast<double>(a) - centre) < std::abs(static_cast<double>(b) - centre);
    });
  }
  if (n >= 2) order.push_back(n - 1);
  order.push_back(0);
  return order;
}

TruncationResult truncate_to_budget(const Transcript& transcript, const TokenCounter& counter,
                                    std::size_t transcript_budget) {
  const auto caption_order = middle_out_order(transcript.caption_lines.size());
  const auto subtitle_order = middle_out_order(transcript.subtitle_lines.size());
  const std::size_t n_captions = caption_order.size();
  const std::size_t total = n_captions + subtitle_order.size();

  auto build = [&](std::size_t removed) {
    const std::size_t from_captions = std::min(removed, n_captions);
    const std::size_t from_subtitles = removed - from_captions;
    return assemble_transcript(without(transcript.subtitle_lines, subtitle_order, from_subtitles),
                               without(transcript.caption_lines, caption_order, from_captions),
                               transcript.clip_length, counter);
  };

  // Smallest removal count that fits; counts shrink as lines go, so bisect and
  // then walk forward in case a tokenizer is not perfectly monotone.
  std::size_t lo = 0;
  std::size_t hi = total;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (build(mid).token_count <= transcript_budget) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  std::size_t removed = lo;
  Transcript fitted = build(removed);
  while (fitted.token_count > transcript_budget && removed < total) fitted = build(++removed);

  TruncationResult out;
  out.dropped_caption_lines = std::min(removed, n_captions);
  out.dropped_subtitle_lines = removed - out.dropped_caption_lines;
  out.transcript = std::move(fitted);
  return out;
}

namespace {

// Floor that treats products within rounding error of an integer as that
// integer, so rates like 2/3 behave as their exact fractions.
double stable_floor(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return nearest;
  return std::floor(x);
}

}  // namespace

std::vector<std::string> drop_lines(const std::vector<std::string>& lines, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::InvalidRate, "drop rate must lie in [0, 1), got " + detail::format_seconds(rate));
  }
  const double keep = 1.0 - rate;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const double here = stable_floor(static_cast<double>(i) * keep);
    const double before = stable_floor((static_cast<double>(i) - 1.0) * keep);
    if (here > before) out.push_back(lines[i]);
  }
  return out;
}

Transcript drop_transcript_lines(const Transcript& transcript, DropTarget target, double rate,
                                 const TokenCounter& counter) {
  if (target == DropTarget::Subtitles) {
    return assemble_transcript(drop_lines(transcript.subtitle_lines, rate), transcript.caption_lines,
                               transcript.clip_length, counter);
  }
  return assemble_transcript(transcript.subtitle_lines, drop_lines(transcript.caption_lines, rate),
                             transcript.clip_length, counter);
}

}  // namespace vidreason
