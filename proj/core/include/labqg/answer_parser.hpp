#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "labqg/common.hpp"
#include "labqg/taxonomy.hpp"

namespace labqg {

// ---------------------------------------------------------------------------
// Output schemas. The field names are the wire contract shared by the prompt
// templates and the validator.

enum class FieldType { text, boolean, integer, text_list, integer_list };

struct FieldSpec {
  std::string name;
  FieldType type;
  std::size_t min_items = 0;  // list fields only
  std::size_t max_items = 0;  // 0 = unbounded
  std::string note;
};

struct SchemaDescriptor {
  std::string schema_id;
  QuestionFormat format;
  std::vector<FieldSpec> fields;
};

/// Marker that stands for one blank in fill-in-the-blank questions.
inline constexpr std::string_view kBlankMarker = "____";

const SchemaDescriptor& schema_for(QuestionFormat format);
const SchemaDescriptor* find_schema(std::string_view schema_id);

/// Example JSON object with placeholder values, as shown to models.
std::string schema_skeleton(const SchemaDescriptor& schema);

// ---------------------------------------------------------------------------
// Validity classification.

enum class FailureCode {
  no_json,
  malformed_json,
  schema_mismatch,
  multiple_correct_in_mc,
  missing_blank,
  blank_answer_mismatch,
  empty_field,
  index_out_of_range,
};

std::string_view to_string(FailureCode code);
std::optional<FailureCode> parse_failure_code(std::string_view name);

struct MultipleChoice {
  std::string question;
  std::vector<std::string> options;
  int answer_index = 0;
  std::string explanation;
  bool operator==(const MultipleChoice&) const = default;
};

struct MultipleSelect {
  std::string question;
  std::vector<std::string> options;
  std::vector<int> answer_indices;
  std::string explanation;
  bool operator==(const MultipleSelect&) const = default;
};

struct TrueFalse {
  std::string question;
  bool answer = false;
  std::string explanation;
  bool operator==(const TrueFalse&) const = default;
};

struct FillInTheBlank {
  std::string question;
  std::vector<std::string> answers;
  std::string explanation;
  bool operator==(const FillInTheBlank&) const = default;
};

struct FreeResponseEssay {
  std::string question;
  std::vector<std::string> exemplar_points;
  bool operator==(const FreeResponseEssay&) const = default;
};

using QuestionPayload =
    std::variant<MultipleChoice, MultipleSelect, TrueFalse, FillInTheBlank, FreeResponseEssay>;

struct ParsedQuestion {
  QuestionFormat format;
  QuestionPayload payload;
  std::string source_digest;
  bool operator==(const ParsedQuestion&) const = default;
};

/// Either a value or a coded failure. Parsing never throws.
template <class T, class E = FailureCode>
class Parsed {
 public:
  Parsed(T value) : state_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Parsed(E code) : state_(code) {}               // NOLINT(google-explicit-constructor)

  bool ok() const noexcept { return std::holds_alternative<T>(state_); }
  explicit operator bool() const noexcept { return ok(); }
  const T& value() const { return std::get<T>(state_); }
  T& value() { return std::get<T>(state_); }
  E failure() const { return std::get<E>(state_); }

 private:
  std::variant<T, E> state_;
};

/// Strips code fences, takes the first balanced `{...}` span (string and
/// escape aware) and parses it strictly. Trailing prose is ignored.
Parsed<json> extract_json(std::string_view raw_text);

/// Validates a JSON object against the schema of `expected`. Extra keys are
/// tolerated; missing keys and cardinality violations are not.
Parsed<ParsedQuestion> parse_question(const json& value, QuestionFormat expected,
                                      std::string_view source_digest = {});

/// Number of maximal underscore runs of length >= 4 in `text`.
std::size_t count_blanks(std::string_view text);

struct ValidityRecord {
  bool json_ok = false;
  std::optional<bool> format_ok;  // present only when json_ok
  std::optional<FailureCode> failure;
  bool operator==(const ValidityRecord&) const = default;
};

struct Classification {
  ValidityRecord validity;
  std::optional<ParsedQuestion> question;
};

/// extract_json followed by parse_question; total and deterministic.
Classification classify(std::string_view raw_text, QuestionFormat expected);

/// A validity record with the coordinates needed for existence grouping.
struct ScoredRecord {
  std::string group;  // (conversation, type, level[, model]) key
  QuestionFormat format;
  ValidityRecord validity;
};

struct ValidityAggregate {
  double json_accuracy = 0.0;
  std::optional<double> format_accuracy;  // absent when no record parsed
  double existence_score = 0.0;
  std::size_t n = 0;
  std::size_t n_json_ok = 0;
  std::size_t n_format_ok = 0;
  std::size_t n_groups = 0;
};

/// Throws EmptyBatch on empty input.
ValidityAggregate score_validity(std::span<const ScoredRecord> records);

json to_json(const ParsedQuestion& q);
ParsedQuestion parsed_question_from_json(const json& j);
json to_json(const ValidityRecord& v);
ValidityRecord validity_from_json(const json& j);

}  // namespace labqg
