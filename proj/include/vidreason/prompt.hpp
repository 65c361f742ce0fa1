#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vidreason/manifest.hpp"
#include "vidreason/transcript.hpp"

namespace vidreason {

inline constexpr int kTemplateVersion = 1;

enum class PromptKind { MultipleChoice, OpenEnded, GroundedQA };
std::string_view to_string(PromptKind kind);

/// Template used for a question kind (knowledge questions are multiple choice).
PromptKind prompt_kind_for(QuestionKind kind);

/// Task prompt body with named slots: {Subtitles}, {Captions},
/// {ClipLength}, {Question}, {Options}.
struct PromptTemplate {
  PromptKind kind = PromptKind::MultipleChoice;
  std::string body;
};

/// The stored templates shipped under templates/.
const PromptTemplate& builtin_template(PromptKind kind);

/// Slot names a template kind must contain, each exactly once.
std::vector<std::string_view> required_slots(PromptKind kind);

/// Throws Error(InvariantViolation) if a slot is missing, repeated or foreign
/// to the kind, or if a kind-specific instruction line is absent.
void validate_template(const PromptTemplate& tmpl);

struct PromptSlots {
  std::string subtitles;
  std::string captions;
  std::string clip_length;
  std::string question;
  std::string options;
};

/// Single-pass substitution; slot values are inserted verbatim.
std::string fill_template(const PromptTemplate& tmpl, const PromptSlots& slots);

/// "8" for whole seconds, otherwise one decimal ("2.5").
std::string format_clip_length(double seconds);

/// "A. first\nB. second"
std::string render_options(const std::vector<AnswerOption>& options);

/// Throws Error(IncompatibleTemplate) when the question kind does not use
/// this template and Error(MissingOptions) for choice questions without options.
std::string render_prompt(PromptKind kind, const Transcript& transcript, const Question& question);

inline std::string render_prompt(const Transcript& transcript, const Question& question) {
  return render_prompt(prompt_kind_for(question.kind), transcript, question);
}

}  // namespace vidreason
