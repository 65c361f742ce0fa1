#include "vidreason/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "embedded_templates.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

namespace {

constexpr std::string_view kSlotNames[] = {"Subtitles", "Captions", "ClipLength", "Question", "Options"};

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

PromptTemplate load_builtin(PromptKind kind) {
  PromptTemplate tmpl{kind, std::string(embedded::template_text(to_string(kind)))};
  validate_template(tmpl);
  return tmpl;
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::MultipleChoice: return "multiple_choice";
    case PromptKind::OpenEnded: return "open_ended";
    case PromptKind::GroundedQA: return "grounded_qa";
  }
  return "unknown";
}

PromptKind prompt_kind_for(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::MultipleChoice:
    case QuestionKind::KnowledgePair: return PromptKind::MultipleChoice;
    case QuestionKind::OpenEnded: return PromptKind::OpenEnded;
    case QuestionKind::GroundedQA: return PromptKind::GroundedQA;
  }
  return PromptKind::OpenEnded;
}

const PromptTemplate& builtin_template(PromptKind kind) {
  static const PromptTemplate mcq = load_builtin(PromptKind::MultipleChoice);
  static const PromptTemplate open = load_builtin(PromptKind::OpenEnded);
  static const PromptTemplate grounded = load_builtin(PromptKind::GroundedQA);
  switch (kind) {
    case PromptKind::MultipleChoice: return mcq;
    case PromptKind::OpenEnded: return open;
    case PromptKind::GroundedQA: return grounded;
  }
  return open;
}

std::vector<std::string_view> required_slots(PromptKind kind) {
  std::vector<std::string_view> slots = {"Subtitles", "Captions", "ClipLength", "Question"};
  if (kind == PromptKind::MultipleChoice) slots.push_back("Options");
  return slots;
}

void validate_template(const PromptTemplate& tmpl) {
  const auto required = required_slots(tmpl.kind);
  const std::string where = "template " + std::string(to_string(tmpl.kind)) + ": ";
  for (auto name : kSlotNames) {
    const auto n = count_occurrences(tmpl.body, "{" + std::string(name) + "}");
    const bool needed = std::find(required.begin(), required.end(), name) != required.end();
    if (needed && n != 1) {
      throw Error(ErrorKind::InvariantViolation, where + "slot {" + std::string(name) + "} must appear exactly once");
    }
    if (!needed && n != 0) {
      throw Error(ErrorKind::InvariantViolation, where + "unexpected slot {" + std::string(name) + "}");
    }
  }
  std::vector<std::string_view> literals;
  if (tmpl.kind == PromptKind::MultipleChoice) {
    literals = {"Respond with only the letter (A, B, C, D, E, etc.) of the correct option.", "The answer is:"};
  } else if (tmpl.kind == PromptKind::OpenEnded) {
    literals = {"The answer is short. Please directly respond with the short answer.", "The answer is:"};
  } else if (tmpl.kind == PromptKind::GroundedQA) {
    literals = {"[[start1, end1], [start2, end2], ...]", "Example 1: [[5, 7]]",
                "Example 2: [[200, 207], [209, 213], [214, 220]]"};
  }
  for (auto lit : literals) {
    if (tmpl.body.find(lit) == std::string::npos) {
      throw Error(ErrorKind::InvariantViolation, where + "missing required line '" + std::string(lit) + "'");
    }
  }
}

std::string fill_template(const PromptTemplate& tmpl, const PromptSlots& slots) {
  auto value_of = [&](std::string_view name) -> const std::string* {
    if (name == "Subtitles") return &slots.subtitles;
    if (name == "Captions") return &slots.captions;
    if (name == "ClipLength") return &slots.clip_length;
    if (name == "Question") return &slots.question;
    if (name == "Options") return &slots.options;
    return nullptr;
  };
  const std::string_view body = tmpl.body;
  std::string out;
  out.reserve(body.size() + slots.subtitles.size() + slots.captions.size() + 256);
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    const auto close = body.find('}', open);
    const std::string* value = close == std::string_view::npos ? nullptr : value_of(body.substr(open + 1, close - open - 1));
    if (value == nullptr) {
      out.append(body.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    out.append(body.substr(pos, open - pos));
    out.append(*value);
    pos = close + 1;
  }
  return out;
}

std::string format_clip_length(double seconds) {
  char buf[64];
  if (std::floor(seconds) == seconds) {
    std::snprintf(buf, sizeof buf, "%.0f", seconds);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f", seconds);
  }
  return buf;
}

std::string render_options(const std::vector<AnswerOption>& options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i) out += '\n';
    out += options[i].letter;
    out += ". ";
    out += options[i].text;
  }
  return out;
}

std::string render_prompt(PromptKind kind, const Transcript& transcript, const Question& question) {
  if (prompt_kind_for(question.kind) != kind) {
    throw Error(ErrorKind::IncompatibleTemplate, "question '" + question.question_id + "' of kind " +
                                                     std::string(to_string(question.kind)) + " cannot use the " +
                                                     std::string(to_string(kind)) + " template");
  }
  if (kind == PromptKind::MultipleChoice && question.options.empty()) {
    throw Error(ErrorKind::MissingOptions, "question '" + question.question_id + "'");
  }
  PromptSlots slots;
  slots.subtitles = transcript.subtitle_block;
  slots.captions = transcript.caption_block;
  slots.clip_length = format_clip_length(transcript.clip_length);
  slots.question = question.text;
  if (kind == PromptKind::MultipleChoice) slots.options = render_options(question.options);
  return fill_template(builtin_template(kind), slots);
}

}  // namespace vidreason
