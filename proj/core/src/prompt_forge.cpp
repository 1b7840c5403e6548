#include "labqg/prompt_forge.hpp"

#include <sstream>

namespace labqg {

namespace {

constexpr std::string_view kLevelNames[] = {"L1", "L2", "L3", "L4"};

std::string_view type_detail(QuestionType t) {
  switch (t) {
    case QuestionType::conceptual:
      return "Ask students to explain what the knowledge unit below is, or how it behaves in the "
             "simulation. Keep the question about this one knowledge unit.";
    case QuestionType::cause_and_effect:
      return "Ask how a change in the first knowledge unit below changes the second one, through "
             "the relationship that links them.";
    case QuestionType::critical_thinking:
      return "Put the knowledge below into a new or more involved situation that students have "
             "not seen directly, so that they must transfer what they learned to answer.";
    case QuestionType::relationship:
      return "Ask students to identify or reason about the relationship below and the knowledge "
             "units it connects.";
    case QuestionType::causal_chain:
      return "Ask students to follow a sequence of changes step by step along the chain below, "
             "from its first knowledge unit to its last.";
    case QuestionType::calculation:
      return "Require a numeric answer obtained by applying the relationship below to specific "
             "values that students could set or measure in the simulation.";
    case QuestionType::justification:
      return "Ask students to defend or challenge an interpretation of the relationship below "
             "using evidence they could collect in the simulation.";
  }
  return {};
}

std::string_view format_detail(QuestionFormat f) {
  switch (f) {
    case QuestionFormat::multiple_choice:
      return "Write one question stem with four answer options. Exactly one option is correct; "
             "the other three are plausible distractors based on common misconceptions.";
    case QuestionFormat::multiple_select:
      return "Write one question stem with four to six answer options, at least two of which are "
             "correct.";
    case QuestionFormat::true_false:
      return "Write one clear statement that is unambiguously true or false.";
    case QuestionFormat::fill_in_the_blank:
      return "Write one sentence or short passage in which one or more key terms are replaced by "
             "blanks.";
    case QuestionFormat::free_response_essay:
      return "Write one open-ended prompt that calls for an extended written response.";
  }
  return {};
}

std::string_view format_rule(QuestionFormat f) {
  switch (f) {
    case QuestionFormat::multiple_choice:
      return "\"options\" holds exactly 4 strings; \"answer_index\" is the 0-based index of the "
             "single correct option.";
    case QuestionFormat::multiple_select:
      return "\"options\" holds 4 to 6 strings; \"answer_indices\" lists the 0-based index of "
             "every correct option (at least 2).";
    case QuestionFormat::true_false:
      return "\"answer\" is a JSON boolean (true or false), not a string.";
    case QuestionFormat::fill_in_the_blank:
      return "Write every blank in \"question\" as ____ (four underscores); \"answers\" holds "
             "one entry per blank, in order.";
    case QuestionFormat::free_response_essay:
      return "\"exemplar_points\" lists the key points a strong answer includes (at least one).";
  }
  return {};
}

std::string_view format_consideration(QuestionFormat f) {
  switch (f) {
    case QuestionFormat::multiple_choice:
      return "Make sure only one option can be defended as correct.";
    case QuestionFormat::multiple_select:
      return "Make every correct option fully correct and every other option clearly incorrect.";
    case QuestionFormat::true_false:
      return "Avoid absolute words such as \"always\" or \"never\" unless the simulation "
             "guarantees them.";
    case QuestionFormat::fill_in_the_blank:
      return "Blank out terms that carry the key idea, not incidental words.";
    case QuestionFormat::free_response_essay:
      return "Scope the prompt so that a student can answer it in a few paragraphs.";
  }
  return {};
}

std::string_view type_consideration(QuestionType t) {
  switch (t) {
    case QuestionType::conceptual:
      return "Do not bring other knowledge units into the question.";
    case QuestionType::cause_and_effect:
      return "State which knowledge unit is changed and ask about the effect on the other.";
    case QuestionType::critical_thinking:
      return "Describe the new situation concretely so the question is self-contained.";
    case QuestionType::relationship:
      return "Name the relationship's knowledge units explicitly.";
    case QuestionType::causal_chain:
      return "Keep the steps in the order given by the chain.";
    case QuestionType::calculation:
      return "Give every value needed, with units, and use realistic magnitudes.";
    case QuestionType::justification:
      return "Ask for evidence, not only a conclusion.";
  }
  return {};
}

std::string ku_label(const ContextSlice& slice, const std::string& id) {
  for (const auto& ku : slice.kus) {
    if (ku.id == id) return ku.name;
  }
  return id;
}

}  // namespace

std::string_view to_string(TelerLevel level) { return kLevelNames[level_number(level) - 1]; }

std::optional<TelerLevel> parse_teler_level(std::string_view name) {
  for (auto level : kAllTelerLevels) {
    if (name == to_string(level) || name == to_string(level).substr(1)) return level;
  }
  return std::nullopt;
}

std::string slice_digest(const ContextSlice& slice) { return sha256_hex(to_json(slice).dump()); }

PromptPackage build_prompt(const ContextSlice& slice, QuestionFormat format, TelerLevel level) {
  const int lv = level_number(level);
  const auto& schema = schema_for(format);
  std::ostringstream out;

  out << "You are helping a science teacher write questions for a virtual lab simulation.\n";
  out << "Task: Write one " << display_name(slice.qtype) << " question in "
      << display_name(format) << " format.\n";

  if (lv >= 2) {
    out << "\nTask details:\n"
        << type_detail(slice.qtype) << "\n"
        << format_detail(format) << "\n"
        << "Use only the knowledge units and relationships listed below.\n";
  }

  out << "\nInstructional goals:\n" << slice.goals_excerpt << "\n";

  out << "\nKnowledge units:\n";
  for (const auto& ku : slice.kus) {
    out << "- [" << ku.id << "] " << ku.name << " (" << to_string(ku.kind) << ")";
    if (!is_blank(ku.description)) out << ": " << ku.description;
    out << "\n";
  }
  if (!slice.rels.empty()) {
    out << "\nRelationships:\n";
    for (const auto& rel : slice.rels) {
      out << "- [" << rel.id << "] " << rel.label << " (";
      out << (rel.directed ? "directed: " : "links: ");
      for (std::size_t i = 0; i < rel.members.size(); ++i) {
        if (i > 0) out << (rel.directed ? " -> " : ", ");
        out << ku_label(slice, rel.members[i]);
      }
      out << ")";
      if (!is_blank(rel.description)) out << ": " << rel.description;
      out << "\n";
    }
  }
  if (slice.chain_order) {
    out << "\nChain to trace: ";
    for (std::size_t i = 0; i < slice.chain_order->size(); ++i) {
      if (i > 0) out << " -> ";
      out << ku_label(slice, (*slice.chain_order)[i]);
    }
    out << "\n";
  }

  if (lv >= 3) {
    out << "\nConsiderations:\n"
        << "1. Align the question with the instructional goals above.\n"
        << "2. Refer only to the knowledge units and relationships provided.\n"
        << "3. Make the question answerable from what students can do or observe in the "
           "simulation.\n"
        << "4. Use clear, grade-appropriate language.\n"
        << "5. Avoid leading wording or hints that reveal the answer.\n"
        << "6. " << format_consideration(format) << "\n"
        << "7. " << type_consideration(slice.qtype) << "\n";
  }

  if (lv >= 4) {
    out << "\nCharacteristics of an ideal response:\n"
        << "- A single JSON object that follows the schema exactly, with nothing before or after "
           "it.\n"
        << "- A fluent, precise question focused on one idea.\n"
        << "- An answer key that is correct and consistent with how the simulation behaves.\n"
        << "- An explanation or exemplar points that help the teacher check student reasoning.\n"
        << "- A question that asks students to reason, not only to recall.\n";
  }

  out << "\nOutput format:\n"
      << "Respond with exactly one JSON object for a " << display_name(format)
      << " question and no other text.\n"
      << "Schema id: " << schema.schema_id << "\n"
      << schema_skeleton(schema) << "\n"
      << format_rule(format) << "\n";

  PromptPackage pkg;
  pkg.prompt_text = out.str();
  pkg.level = level;
  pkg.qtype = slice.qtype;
  pkg.format = format;
  pkg.schema_id = schema.schema_id;
  pkg.slice_digest = slice_digest(slice);
  pkg.element_manifest = slice_element_ids(slice);
  return pkg;
}

}  // namespace labqg
