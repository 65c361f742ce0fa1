#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vidreason/answer_parse.hpp"
#include "vidreason/manifest.hpp"

namespace vidreason {

inline constexpr int kReportSchemaVersion = 1;

/// Scored outcome of one question.
struct Verdict {
  std::string video_id;
  std::string question_id;
  QuestionKind kind = QuestionKind::MultipleChoice;
  PrePostRole pre_post_role = PrePostRole::None;
  std::string predicted;
  std::string gold;
  bool correct = false;
  /// Present exactly for grounded questions.
  std::optional<double> iou;
  bool abstained = false;
  std::optional<std::string> category;
  /// Backend or parse failure detail; empty when the question ran cleanly.
  std::string note;
  /// True when a backend failure (not a parse failure) caused the abstention.
  bool failed = false;

  /// "video/question", or the bare question id when video_id is empty.
  std::string key() const;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

struct KnowledgeGain {
  double acc_pre = 0.0;
  double acc_post = 0.0;
  /// Absent when acc_pre is 100 (degenerate baseline).
  std::optional<double> delta_knowledge;
  std::string note;
};

struct EvalCounts {
  std::size_t total = 0;
  std::size_t accuracy_scored = 0;
  std::size_t correct = 0;
  std::size_t grounded = 0;
  std::size_t abstentions = 0;
  std::size_t failures = 0;
};

struct EvalReport {
  std::optional<double> accuracy_overall;
  std::map<std::string, double> accuracy_by_category;
  std::map<std::string, std::size_t> category_counts;
  std::optional<double> miou;
  std::optional<KnowledgeGain> knowledge;
  EvalCounts counts;
  std::vector<Verdict> verdicts;
};

/// Percentage of predictions equal to the gold letter; nullopt predictions
/// are abstentions and count as wrong. Throws Error(EmptyInput).
double score_mcq(const std::vector<std::pair<std::optional<char>, char>>& predictions);

/// Sorted, merged union of the given intervals (empty spans dropped).
std::vector<TimeInterval> union_intervals(std::vector<TimeInterval> intervals);

/// |U(pred) ∩ U(gold)| / |U(pred) ∪ U(gold)| on the continuous time line.
double interval_iou(const std::vector<TimeInterval>& pred, const std::vector<TimeInterval>& gold);
double interval_iou(const IntervalPrediction& pred, const std::vector<TimeInterval>& gold);

/// Mean IoU as a percentage; nullopt entries (parse failures) count as 0.
/// Throws Error(EmptyInput).
double mean_iou(const std::vector<std::optional<double>>& ious);

/// (post - pre) / (100 - pre) * 100. Throws Error(DegenerateBaseline) when
/// pre is 100 and Error(InvariantViolation) for percentages out of range.
double delta_knowledge(double acc_pre, double acc_post);

/// Case-insensitive comparison after trimming punctuation and collapsing spaces.
bool open_answer_matches(std::string_view predicted, std::string_view gold);

/// Aggregates verdicts. `category_labels` maps Verdict::key() to a label and
/// overrides the verdicts' own category. Throws Error(EmptyInput) for no
/// verdicts and Error(UnknownCategoryLabel) for labels without a verdict.
EvalReport build_report(std::vector<Verdict> verdicts, const std::map<std::string, std::string>& category_labels = {});

nlohmann::json aggregate_record(const EvalReport& report);
/// One verdict record per line followed by the aggregate record.
std::string report_jsonl(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace vidreason
