#include "vidreason/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "text_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

using nlohmann::json;

namespace {

constexpr std::string_view kPreSuffix = "::pre";
constexpr std::string_view kPostSuffix = "::post";

[[noreturn]] void malformed(const std::string& reason) {
  throw Error(ErrorKind::MalformedRecord, reason);
}

[[noreturn]] void violation(const std::string& video_id, const std::string& what) {
  throw Error(ErrorKind::InvariantViolation, "video '" + video_id + "': " + what);
}

void reject_unknown_fields(const json& obj, std::initializer_list<std::string_view> allowed,
                           std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      malformed("unknown field '" + key + "' in " + std::string(where));
    }
  }
}

const json& require(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed("missing field '" + std::string(key) + "' in " + std::string(where));
  return *it;
}

std::string require_string(const json& obj, const char* key, std::string_view where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) malformed("field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

double require_number(const json& v, std::string_view what) {
  if (!v.is_number()) malformed(std::string(what) + " must be a number");
  return v.get<double>();
}

QuestionKind parse_kind(const std::string& s) {
  if (s == "multiple_choice") return QuestionKind::MultipleChoice;
  if (s == "open_ended") return QuestionKind::OpenEnded;
  if (s == "grounded_qa") return QuestionKind::GroundedQA;
  if (s == "knowledge_pair") return QuestionKind::KnowledgePair;
  malformed("unknown question kind '" + s + "'");
}

PrePostRole parse_role(const std::string& s) {
  if (s == "none") return PrePostRole::None;
  if (s == "pre") return PrePostRole::Pre;
  if (s == "post") return PrePostRole::Post;
  malformed("unknown pre_post_role '" + s + "'");
}

char parse_letter(const json& v, std::string_view where) {
  if (!v.is_string() || v.get_ref<const std::string&>().size() != 1) {
    malformed(std::string(where) + " must be a single letter string");
  }
  return v.get_ref<const std::string&>()[0];
}

Question question_from_json(const json& q) {
  if (!q.is_object()) malformed("question must be an object");
  reject_unknown_fields(q, {"question_id", "text", "kind", "options", "ground_truth", "pre_post_role"},
                        "question");
  Question out;
  out.question_id = require_string(q, "question_id", "question");
  out.text = require_string(q, "text", "question");
  out.kind = parse_kind(require_string(q, "kind", "question"));
  if (auto it = q.find("pre_post_role"); it != q.end()) {
    if (!it->is_string()) malformed("pre_post_role must be a string");
    out.pre_post_role = parse_role(it->get<std::string>());
  }
  if (auto it = q.find("options"); it != q.end()) {
    if (!it->is_array()) malformed("options must be an array");
    for (const auto& opt : *it) {
      if (!opt.is_object()) malformed("option must be an object");
      reject_unknown_fields(opt, {"letter", "text"}, "option");
      out.options.push_back({parse_letter(require(opt, "letter", "option"), "option letter"),
                             require_string(opt, "text", "option")});
    }
    if (!out.has_options()) malformed("question '" + out.question_id + "' of this kind takes no options");
  }
  const auto& gt = require(q, "ground_truth", "question");
  switch (out.kind) {
    case QuestionKind::MultipleChoice:
    case QuestionKind::KnowledgePair:
      out.ground_truth = LetterAnswer{parse_letter(gt, "ground_truth")};
      break;
    case QuestionKind::OpenEnded:
      if (!gt.is_string()) malformed("open-ended ground_truth must be a string");
      out.ground_truth = TextAnswer{gt.get<std::string>()};
      break;
    case QuestionKind::GroundedQA: {
      if (!gt.is_array()) malformed("grounded ground_truth must be a list of [start, end] pairs");
      IntervalAnswer answer;
      for (const auto& pair : gt) {
        if (!pair.is_array() || pair.size() != 2) malformed("interval must be a [start, end] pair");
        answer.intervals.push_back({require_number(pair[0], "interval start"),
                                    require_number(pair[1], "interval end")});
      }
      out.ground_truth = std::move(answer);
      break;
    }
  }
  return out;
}

json question_to_json(const Question& q) {
  json out = {{"question_id", q.question_id}, {"text", q.text}};
  switch (q.kind) {
    case QuestionKind::MultipleChoice: out["kind"] = "multiple_choice"; break;
    case QuestionKind::OpenEnded: out["kind"] = "open_ended"; break;
    case QuestionKind::GroundedQA: out["kind"] = "grounded_qa"; break;
    case QuestionKind::KnowledgePair: out["kind"] = "knowledge_pair"; break;
  }
  if (q.has_options()) {
    json opts = json::array();
    for (const auto& o : q.options) opts.push_back({{"letter", std::string(1, o.letter)}, {"text", o.text}});
    out["options"] = std::move(opts);
  }
  std::visit(
      [&](const auto& gt) {
        using T = std::decay_t<decltype(gt)>;
        if constexpr (std::is_same_v<T, LetterAnswer>) {
          out["ground_truth"] = std::string(1, gt.letter);
        } else if constexpr (std::is_same_v<T, TextAnswer>) {
          out["ground_truth"] = gt.text;
        } else {
          json spans = json::array();
          for (const auto& iv : gt.intervals) spans.push_back({iv.start, iv.end});
          out["ground_truth"] = std::move(spans);
        }
      },
      q.ground_truth);
  if (q.pre_post_role != PrePostRole::None) out["pre_post_role"] = std::string(to_string(q.pre_post_role));
  return out;
}

void validate_question(const VideoManifest& video, const Question& q) {
  const std::string where = "question '" + q.question_id + "': ";
  if (q.question_id.empty()) violation(video.video_id, "empty question_id");
  const bool needs_letter = q.has_options();
  if (needs_letter != std::holds_alternative<LetterAnswer>(q.ground_truth)) {
    violation(video.video_id, where + "ground truth type does not match question kind");
  }
  if (q.has_options()) {
    if (q.options.size() < 2) violation(video.video_id, where + "needs at least two options");
    char prev = 0;
    for (const auto& opt : q.options) {
      if (opt.letter < 'A' || opt.letter > 'Z') violation(video.video_id, where + "option letters must be A..Z");
      if (opt.letter <= prev) violation(video.video_id, where + "option letters must be distinct and in order");
      prev = opt.letter;
    }
    const char gold = std::get<LetterAnswer>(q.ground_truth).letter;
    if (std::none_of(q.options.begin(), q.options.end(), [&](const auto& o) { return o.letter == gold; })) {
      violation(video.video_id, where + "gold letter is not an option");
    }
  } else if (!q.options.empty()) {
    violation(video.video_id, where + "options present for a kind without options");
  }
  if (q.kind == QuestionKind::OpenEnded && detail::trim(std::get<TextAnswer>(q.ground_truth).text).empty()) {
    violation(video.video_id, where + "empty open-ended ground truth");
  }
  if (q.kind == QuestionKind::GroundedQA) {
    const auto& spans = std::get<IntervalAnswer>(q.ground_truth).intervals;
    if (spans.empty()) violation(video.video_id, where + "grounded ground truth needs at least one interval");
    for (const auto& iv : spans) {
      if (!(iv.start >= 0.0 && iv.start < iv.end && iv.end <= video.duration)) {
        violation(video.video_id, where + "interval [" + detail::format_seconds(iv.start) + ", " +
                                      detail::format_seconds(iv.end) +
                                      "] violates 0 <= start < end <= duration");
      }
    }
  }
  if (q.kind == QuestionKind::KnowledgePair) {
    const auto pair = q.pair_id();
    if (!pair || q.pre_post_role == PrePostRole::None) {
      violation(video.video_id, where + "knowledge questions need a '::pre' or '::post' id suffix and role");
    }
    const bool is_pre = q.question_id.ends_with(kPreSuffix);
    if ((q.pre_post_role == PrePostRole::Pre) != is_pre) {
      violation(video.video_id, where + "pre_post_role does not match the id suffix");
    }
  } else if (q.pre_post_role != PrePostRole::None) {
    violation(video.video_id, where + "pre_post_role is only valid for knowledge questions");
  }
}

}  // namespace

std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::MultipleChoice: return "multiple_choice";
    case QuestionKind::OpenEnded: return "open_ended";
    case QuestionKind::GroundedQA: return "grounded_qa";
    case QuestionKind::KnowledgePair: return "knowledge_pair";
  }
  return "unknown";
}

std::string_view to_string(PrePostRole role) {
  switch (role) {
    case PrePostRole::None: return "none";
    case PrePostRole::Pre: return "pre";
    case PrePostRole::Post: return "post";
  }
  return "unknown";
}

std::string describe(const AnswerKey& key) {
  return std::visit(
      [](const auto& gt) -> std::string {
        using T = std::decay_t<decltype(gt)>;
        if constexpr (std::is_same_v<T, LetterAnswer>) {
          return std::string(1, gt.letter);
        } else if constexpr (std::is_same_v<T, TextAnswer>) {
          return gt.text;
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < gt.intervals.size(); ++i) {
            if (i) out += ", ";
            out += "[" + detail::format_seconds(gt.intervals[i].start) + ", " +
                   detail::format_seconds(gt.intervals[i].end) + "]";
          }
          return out + "]";
        }
      },
      key);
}

std::optional<std::string> Question::pair_id() const {
  for (auto suffix : {kPreSuffix, kPostSuffix}) {
    if (question_id.size() > suffix.size() && question_id.ends_with(suffix)) {
      return question_id.substr(0, question_id.size() - suffix.size());
    }
  }
  return std::nullopt;
}

const Question* VideoManifest::find_question(std::string_view question_id) const {
  for (const auto& q : questions) {
    if (q.question_id == question_id) return &q;
  }
  return nullptr;
}

void validate(const VideoManifest& video) {
  if (video.video_id.empty()) violation(video.video_id, "empty video_id");
  if (!(video.duration > 0.0)) violation(video.video_id, "duration must be positive");
  std::set<std::string> ids;
  for (const auto& q : video.questions) {
    if (!ids.insert(q.question_id).second) violation(video.video_id, "duplicate question_id '" + q.question_id + "'");
    validate_question(video, q);
  }
  // Every knowledge question needs its counterpart.
  for (const auto& q : video.questions) {
    if (q.kind != QuestionKind::KnowledgePair) continue;
    const auto partner = *q.pair_id() + std::string(q.pre_post_role == PrePostRole::Pre ? kPostSuffix : kPreSuffix);
    const Question* other = video.find_question(partner);
    if (other == nullptr || other->kind != QuestionKind::KnowledgePair) {
      violation(video.video_id, "knowledge question '" + q.question_id + "' has no partner '" + partner + "'");
    }
  }
  for (const auto& [qid, _] : video.category_labels) {
    if (!ids.contains(qid)) violation(video.video_id, "category label for unknown question '" + qid + "'");
  }
}

json to_json(const VideoManifest& video) {
  json questions = json::array();
  for (const auto& q : video.questions) questions.push_back(question_to_json(q));
  json out = {{"schema_version", kManifestSchemaVersion},
              {"video_id", video.video_id},
              {"media_uri", video.media_uri},
              {"duration", video.duration},
              {"questions", std::move(questions)}};
  if (!video.category_labels.empty()) out["category_labels"] = video.category_labels;
  return out;
}

VideoManifest manifest_from_json(const json& record) {
  if (!record.is_object()) malformed("record must be an object");
  reject_unknown_fields(record,
                        {"schema_version", "video_id", "media_uri", "duration", "questions", "category_labels"},
                        "video record");
  const auto& version = require(record, "schema_version", "video record");
  if (!version.is_number_integer() || version.get<int>() != kManifestSchemaVersion) {
    malformed("unsupported schema_version (expected " + std::to_string(kManifestSchemaVersion) + ")");
  }
  VideoManifest out;
  out.video_id = require_string(record, "video_id", "video record");
  out.media_uri = require_string(record, "media_uri", "video record");
  out.duration = require_number(require(record, "duration", "video record"), "duration");
  const auto& questions = require(record, "questions", "video record");
  if (!questions.is_array()) malformed("questions must be an array");
  for (const auto& q : questions) out.questions.push_back(question_from_json(q));
  if (auto it = record.find("category_labels"); it != record.end()) {
    if (!it->is_object()) malformed("category_labels must be an object");
    for (const auto& [qid, label] : it->items()) {
      if (!label.is_string()) malformed("category label must be a string");
      out.category_labels[qid] = label.get<std::string>();
    }
  }
  return out;
}

std::vector<VideoManifest> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + path.string());
  std::vector<VideoManifest> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    VideoManifest video;
    try {
      video = manifest_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MalformedRecord) throw;
      throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(video.video_id).second) {
      throw Error(ErrorKind::DuplicateVideoId, "line " + std::to_string(line_no) + ": '" + video.video_id + "'");
    }
    validate(video);
    out.push_back(std::move(video));
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const std::vector<VideoManifest>& videos) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write manifest " + path.string());
  for (const auto& v : videos) out << to_json(v).dump() << '\n';
  if (!out) throw Error(ErrorKind::IoError, "failed writing manifest " + path.string());
}

std::vector<SubtitleSegment> normalize_subtitles(std::vector<SubtitleSegment> raw) {
  std::vector<SubtitleSegment> kept;
  kept.reserve(raw.size());
  for (auto& seg : raw) {
    auto text = detail::trim(seg.text);
    if (text.empty() || !(seg.start >= 0.0) || !(seg.start < seg.end)) continue;
    kept.push_back({seg.start, seg.end, std::string(text)});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.start < b.start || (a.start == b.start && a.end < b.end);
  });
  std::vector<SubtitleSegment> out;
  for (auto& seg : kept) {
    if (!out.empty() && seg.start < out.back().end) {
      auto& cur = out.back();
      cur.end = std::max(cur.end, seg.end);
      cur.text += ' ';
      cur.text += seg.text;
    } else {
      out.push_back(std::move(seg));
    }
  }
  return out;
}

}  // namespace vidreason
