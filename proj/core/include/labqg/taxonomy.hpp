#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "labqg/sim_model.hpp"

namespace labqg {

enum class QuestionType {
  conceptual,
  cause_and_effect,
  critical_thinking,
  relationship,
  causal_chain,
  calculation,
  justification,
};

enum class QuestionFormat {
  multiple_choice,
  multiple_select,
  true_false,
  fill_in_the_blank,
  free_response_essay,
};

inline constexpr std::array<QuestionType, 7> kAllQuestionTypes = {
    QuestionType::conceptual,   QuestionType::cause_and_effect, QuestionType::critical_thinking,
    QuestionType::relationship, QuestionType::causal_chain,     QuestionType::calculation,
    QuestionType::justification,
};

inline constexpr std::array<QuestionFormat, 5> kAllQuestionFormats = {
    QuestionFormat::multiple_choice,   QuestionFormat::multiple_select,
    QuestionFormat::true_false,        QuestionFormat::fill_in_the_blank,
    QuestionFormat::free_response_essay,
};

// Serialization names are the lowercase snake_case enumerator spellings.
std::string_view to_string(QuestionType t);
std::string_view to_string(QuestionFormat f);
std::optional<QuestionType> parse_question_type(std::string_view name);
std::optional<QuestionFormat> parse_question_format(std::string_view name);

/// Human-facing names used inside prompts ("cause-and-effect", "true/false").
std::string_view display_name(QuestionType t);
std::string_view display_name(QuestionFormat f);

/// The part of a representation that conditions one question type.
struct ContextSlice {
  std::string sim_ref;
  QuestionType qtype = QuestionType::conceptual;
  std::string goals_excerpt;
  std::vector<KnowledgeUnit> kus;
  std::vector<Relationship> rels;
  std::optional<std::vector<std::string>> chain_order;

  bool operator==(const ContextSlice&) const = default;
};

std::set<QuestionType> supported_types(const SimulationRepresentation& s);

/// Seeded, deterministic slice selection. Candidates are ordered by id and
/// picked at index seed mod count. Throws TypeUnsupported when `qtype` is
/// not available for `s`.
ContextSlice context_for(const SimulationRepresentation& s, QuestionType qtype, std::uint64_t seed);

/// Empty when the slice satisfies the shape rules for its type; otherwise a
/// description of the first broken rule.
std::optional<std::string> check_slice(const ContextSlice& slice);

/// Ids of the elements a slice carries: "goals" plus KU and relationship ids.
std::set<std::string> slice_element_ids(const ContextSlice& slice);

json to_json(const ContextSlice& slice);
ContextSlice slice_from_json(const json& j);

}  // namespace labqg
