#include "lifted/prompt.hpp"

#include "lifted/errors.hpp"
#include "lifted/hash.hpp"

namespace lifted {

namespace {

std::string python_quote(const std::string& s) {
  const bool has_single = s.find('\'') != std::string::npos;
  const bool has_double = s.find('"') != std::string::npos;
  const char quote = has_single && !has_double ? '"' : '\'';
  std::string out(1, quote);
  for (char c : s) {
    if (c == '\\' || c == quote) out.push_back('\\');
    out.push_back(c);
  }
  out.push_back(quote);
  return out;
}

constexpr std::string_view kSchemaDefinition =
    "phase: the clinical trial phase\n"
    "diseases: list of diseases or conditions studied in the trial\n"
    "drugs: list of drug names under investigation\n"
    "description: free-text description of the investigated drugs\n"
    "smiles: list of SMILES strings of the drug molecules\n"
    "criteria: eligibility criteria, with inclusion and exclusion sections";

constexpr std::string_view kExampleSummary =
    "This study will test the ability of extended-release nifedipine (Procardia XL), a blood "
    "pressure medication, to permit a decrease in the dose of glucocorticoid medication "
    "children take to treat congenital adrenal hyperplasia (CAH).";

}  // namespace

std::string render_list(std::span<const std::string> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += python_quote(values[i]);
  }
  out += ']';
  return out;
}

std::string linearize(const TrialRecord& record, Modality kind) {
  if (kind == Modality::kSummarization) {
    throw ContractError("linearize: summarization has no raw field");
  }
  std::string out(modality_name(kind));
  out += ": ";
  const auto& value = record.raw(kind);
  if (const auto* list = std::get_if<std::vector<std::string>>(&value)) {
    out += render_list(*list);
  } else {
    out += std::get<std::string>(value);
  }
  return out;
}

std::string linearize_all(const TrialRecord& record) {
  return linearize_all(record, kRawModalities);
}

std::string linearize_all(const TrialRecord& record, std::span<const Modality> kinds) {
  std::string out = "phase: " + phase_label(record.phase);
  for (auto kind : kinds) {
    out += "; ";
    out += linearize(record, kind);
  }
  return out;
}

std::string PromptBundle::render() const { return prefix + linearization + suffix; }

std::string PromptBundle::hash() const {
  std::string material = system_message;
  material.push_back('\0');
  material += render();
  return content_hash(material);
}

std::string_view default_schema_definition() { return kSchemaDefinition; }

PromptBundle build_prompt(std::string_view linearization) {
  return build_prompt(linearization, kSchemaDefinition);
}

PromptBundle build_prompt(std::string_view linearization, std::string_view schema_definition) {
  PromptBundle p;
  p.system_message = std::string(kSystemMessage);
  p.prefix = "Here is the schema definition of the table:\n\n" + std::string(schema_definition) +
             "\n\nThis is a sample from the table:\n\n";
  p.linearization = std::string(linearization);
  p.suffix = "\n\n" + std::string(kSummaryInstruction) +
             " You should describe the important values, like drugs and diseases, instead of "
             "just the names of columns in the table.\n\n"
             "A brief summarization of another sample may look like:\n\n" +
             std::string(kExampleSummary) +
             "\n\nNote that the example is not the summarization of the sample you have to "
             "summarize.";
  return p;
}

}  // namespace lifted
