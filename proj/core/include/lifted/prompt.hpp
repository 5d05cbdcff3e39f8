#pragma once

#include <span>
#include <string>
#include <string_view>

#include "lifted/data_model.hpp"

namespace lifted {

// "name: value". Lists render as ['a', 'b'] with Python string quoting.
// kind must be a raw modality; summarization raises ContractError.
std::string linearize(const TrialRecord& record, Modality kind);

// "phase: phase N; <modality>; <modality>; ..." in the given order.
std::string linearize_all(const TrialRecord& record);
std::string linearize_all(const TrialRecord& record, std::span<const Modality> kinds);

// Quoted list rendering used by linearize, e.g. ['cancer', "Alzheimer's"].
std::string render_list(std::span<const std::string> values);

struct PromptBundle {
  std::string system_message;
  std::string prefix;
  std::string linearization;
  std::string suffix;

  // User-turn text: prefix + linearization + suffix.
  std::string render() const;
  // Stable key over the system message and the rendered user turn.
  std::string hash() const;
};

inline constexpr std::string_view kSystemMessage = "You are a helpful assistant.";
inline constexpr std::string_view kSummaryInstruction =
    "Please briefly summarize the sample with its value in one sentence.";

// Column descriptions substituted into the prompt prefix. Editable; passed
// to build_prompt explicitly when a different schema text is wanted.
std::string_view default_schema_definition();

PromptBundle build_prompt(std::string_view linearization);
PromptBundle build_prompt(std::string_view linearization, std::string_view schema_definition);

}  // namespace lifted
