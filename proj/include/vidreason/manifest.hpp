#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vidreason {

inline constexpr int kManifestSchemaVersion = 1;

/// Half-open span of video time in seconds.
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

/// One transcribed spoken segment.
struct SubtitleSegment {
  double start = 0.0;
  double end = 0.0;
  std::string text;

  friend bool operator==(const SubtitleSegment&, const SubtitleSegment&) = default;
};

/// Caption produced for one planned clip.
struct ClipCaption {
  double start = 0.0;
  double end = 0.0;
  std::string text;

  friend bool operator==(const ClipCaption&, const ClipCaption&) = default;
};

enum class QuestionKind { MultipleChoice, OpenEnded, GroundedQA, KnowledgePair };
enum class PrePostRole { None, Pre, Post };

std::string_view to_string(QuestionKind kind);
std::string_view to_string(PrePostRole role);

struct AnswerOption {
  char letter = 'A';
  std::string text;

  friend bool operator==(const AnswerOption&, const AnswerOption&) = default;
};

/// Gold letter for choice questions.
struct LetterAnswer {
  char letter = 'A';
  friend bool operator==(const LetterAnswer&, const LetterAnswer&) = default;
};

/// Gold free text for open-ended questions.
struct TextAnswer {
  std::string text;
  friend bool operator==(const TextAnswer&, const TextAnswer&) = default;
};

/// Gold evidence spans for grounded questions.
struct IntervalAnswer {
  std::vector<TimeInterval> intervals;
  friend bool operator==(const IntervalAnswer&, const IntervalAnswer&) = default;
};

using AnswerKey = std::variant<LetterAnswer, TextAnswer, IntervalAnswer>;

std::string describe(const AnswerKey& key);

struct Question {
  std::string question_id;
  std::string text;
  QuestionKind kind = QuestionKind::MultipleChoice;
  std::vector<AnswerOption> options;
  AnswerKey ground_truth;
  PrePostRole pre_post_role = PrePostRole::None;

  bool has_options() const {
    return kind == QuestionKind::MultipleChoice || kind == QuestionKind::KnowledgePair;
  }
  /// Pair id of a knowledge question ("lesson3" for "lesson3::pre").
  std::optional<std::string> pair_id() const;

  friend bool operator==(const Question&, const Question&) = default;
};

struct VideoManifest {
  std::string video_id;
  std::string media_uri;
  double duration = 0.0;
  std::vector<Question> questions;
  std::map<std::string, std::string> category_labels;

  const Question* find_question(std::string_view question_id) const;

  friend bool operator==(const VideoManifest&, const VideoManifest&) = default;
};

/// Checks every manifest, question and label invariant; throws
/// Error(InvariantViolation) naming the video and the broken rule.
void validate(const VideoManifest& video);

nlohmann::json to_json(const VideoManifest& video);
/// Strict decode: unknown fields and wrong types raise MalformedRecord.
VideoManifest manifest_from_json(const nlohmann::json& record);

/// Reads a line-delimited manifest file. Blank lines are skipped.
std::vector<VideoManifest> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<VideoManifest>& videos);

/// Sorts by start, drops empty or degenerate segments and merges
/// overlapping ones (texts joined with one space, span becomes the envelope).
std::vector<SubtitleSegment> normalize_subtitles(std::vector<SubtitleSegment> raw);

}  // namespace vidreason
