#include "labqg/answer_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <set>

namespace labqg {

namespace {

constexpr std::string_view kFailureNames[] = {
    "no_json",      "malformed_json", "schema_mismatch",       "multiple_correct_in_mc",
    "missing_blank", "blank_answer_mismatch", "empty_field", "index_out_of_range",
};

std::vector<SchemaDescriptor> build_schemas() {
  using F = FieldType;
  return {
      {"labqg.multiple_choice.v1",
       QuestionFormat::multiple_choice,
       {{"question", F::text, 0, 0, "the question stem"},
        {"options", F::text_list, 4, 4, "exactly 4 answer options"},
        {"answer_index", F::integer, 0, 0, "0-based index of the single correct option"},
        {"explanation", F::text, 0, 0, "why the correct option is right"}}},
      {"labqg.multiple_select.v1",
       QuestionFormat::multiple_select,
       {{"question", F::text, 0, 0, "the question stem"},
        {"options", F::text_list, 4, 6, "4 to 6 answer options"},
        {"answer_indices", F::integer_list, 1, 0, "0-based indices of every correct option"},
        {"explanation", F::text, 0, 0, "why the correct options are right"}}},
      {"labqg.true_false.v1",
       QuestionFormat::true_false,
       {{"question", F::text, 0, 0, "a statement to judge as true or false"},
        {"answer", F::boolean, 0, 0, "true or false (a JSON boolean)"},
        {"explanation", F::text, 0, 0, "why the statement is true or false"}}},
      {"labqg.fill_in_the_blank.v1",
       QuestionFormat::fill_in_the_blank,
       {{"question", F::text, 0, 0, "sentence with each blank written as ____"},
        {"answers", F::text_list, 1, 0, "one answer per blank, in order"},
        {"explanation", F::text, 0, 0, "why the answers are correct"}}},
      {"labqg.free_response_essay.v1",
       QuestionFormat::free_response_essay,
       {{"question", F::text, 0, 0, "the essay prompt"},
        {"exemplar_points", F::text_list, 1, 0, "key points a strong answer covers"}}},
  };
}

const std::vector<SchemaDescriptor>& schemas() {
  static const std::vector<SchemaDescriptor> registry = build_schemas();
  return registry;
}

std::string strip_fences(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw.compare(i, 3, "```") == 0) {
      i += 3;
      // drop an info string such as "json"
      while (i < raw.size() && raw[i] != '\n' && raw[i] != '{' &&
             !std::isspace(static_cast<unsigned char>(raw[i]))) {
        ++i;
      }
      continue;
    }
    out.push_back(raw[i++]);
  }
  return out;
}

// Returns end offset (exclusive) of the balanced object starting at `begin`,
// or npos when the text ends first.
std::size_t balanced_end(std::string_view text, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

// Field readers. Each returns nullopt on missing key or wrong type.
std::optional<std::string> text_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<std::vector<std::string>> text_list(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) return std::nullopt;
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::int64_t> as_int(const json& v) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      return std::numeric_limits<std::int64_t>::max();
    }
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  return std::nullopt;
}

std::optional<std::int64_t> int_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  return as_int(*it);
}

std::optional<std::vector<std::int64_t>> int_list(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) return std::nullopt;
  std::vector<std::int64_t> out;
  for (const auto& v : *it) {
    auto i = as_int(v);
    if (!i) return std::nullopt;
    out.push_back(*i);
  }
  return out;
}

bool any_blank(const std::vector<std::string>& items) {
  return std::any_of(items.begin(), items.end(), [](const std::string& s) { return is_blank(s); });
}

Parsed<QuestionPayload> parse_mc(const json& obj) {
  const bool has_single = obj.contains("answer_index");
  if (!has_single) {
    auto it = obj.find("answer_indices");
    if (it != obj.end() && it->is_array() && it->size() >= 2) {
      return FailureCode::multiple_correct_in_mc;
    }
  } else if (const auto& v = obj["answer_index"]; v.is_array() && v.size() >= 2) {
    return FailureCode::multiple_correct_in_mc;
  }
  auto question = text_field(obj, "question");
  auto options = text_list(obj, "options");
  auto index = int_field(obj, "answer_index");
  auto explanation = text_field(obj, "explanation");
  if (!question || !options || !index || !explanation) return FailureCode::schema_mismatch;
  if (options->size() != 4) return FailureCode::schema_mismatch;
  if (is_blank(*question) || is_blank(*explanation) || any_blank(*options)) {
    return FailureCode::empty_field;
  }
  if (*index < 0 || *index > 3) return FailureCode::index_out_of_range;
  return QuestionPayload{
      MultipleChoice{*question, *options, static_cast<int>(*index), *explanation}};
}

Parsed<QuestionPayload> parse_ms(const json& obj) {
  auto question = text_field(obj, "question");
  auto options = text_list(obj, "options");
  auto indices = int_list(obj, "answer_indices");
  auto explanation = text_field(obj, "explanation");
  if (!question || !options || !indices || !explanation) return FailureCode::schema_mismatch;
  if (options->size() < 4 || options->size() > 6) return FailureCode::schema_mismatch;
  if (indices->empty()) return FailureCode::schema_mismatch;
  if (std::set<std::int64_t>(indices->begin(), indices->end()).size() != indices->size()) {
    return FailureCode::schema_mismatch;
  }
  if (is_blank(*question) || is_blank(*explanation) || any_blank(*options)) {
    return FailureCode::empty_field;
  }
  const auto n = static_cast<std::int64_t>(options->size());
  std::vector<int> out;
  for (auto i : *indices) {
    if (i < 0 || i >= n) return FailureCode::index_out_of_range;
    out.push_back(static_cast<int>(i));
  }
  return QuestionPayload{MultipleSelect{*question, *options, out, *explanation}};
}

Parsed<QuestionPayload> parse_tf(const json& obj) {
  auto question = text_field(obj, "question");
  auto explanation = text_field(obj, "explanation");
  auto it = obj.find("answer");
  if (!question || !explanation || it == obj.end() || !it->is_boolean()) {
    return FailureCode::schema_mismatch;
  }
  if (is_blank(*question) || is_blank(*explanation)) return FailureCode::empty_field;
  return QuestionPayload{TrueFalse{*question, it->get<bool>(), *explanation}};
}

Parsed<QuestionPayload> parse_fib(const json& obj) {
  auto question = text_field(obj, "question");
  auto answers = text_list(obj, "answers");
  auto explanation = text_field(obj, "explanation");
  if (!question || !answers || !explanation) return FailureCode::schema_mismatch;
  if (is_blank(*question) || is_blank(*explanation) || any_blank(*answers)) {
    return FailureCode::empty_field;
  }
  const auto blanks = count_blanks(*question);
  if (blanks == 0) return FailureCode::missing_blank;
  if (blanks != answers->size()) return FailureCode::blank_answer_mismatch;
  return QuestionPayload{FillInTheBlank{*question, *answers, *explanation}};
}

Parsed<QuestionPayload> parse_essay(const json& obj) {
  auto question = text_field(obj, "question");
  auto points = text_list(obj, "exemplar_points");
  if (!question || !points) return FailureCode::schema_mismatch;
  if (points->empty()) return FailureCode::schema_mismatch;
  if (is_blank(*question) || any_blank(*points)) return FailureCode::empty_field;
  return QuestionPayload{FreeResponseEssay{*question, *points}};
}

}  // namespace

const SchemaDescriptor& schema_for(QuestionFormat format) {
  return schemas()[static_cast<int>(format)];
}

const SchemaDescriptor* find_schema(std::string_view schema_id) {
  for (const auto& s : schemas()) {
    if (s.schema_id == schema_id) return &s;
  }
  return nullptr;
}

std::string schema_skeleton(const SchemaDescriptor& schema) {
  std::string out = "{";
  bool first = true;
  for (const auto& f : schema.fields) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + f.name + "\": ";
    switch (f.type) {
      case FieldType::text: out += "\"<string>\""; break;
      case FieldType::boolean: out += "<true|false>"; break;
      case FieldType::integer: out += "<integer>"; break;
      case FieldType::text_list: out += "[\"<string>\", ...]"; break;
      case FieldType::integer_list: out += "[<integer>, ...]"; break;
    }
  }
  out += "}";
  return out;
}

std::string_view to_string(FailureCode code) { return kFailureNames[static_cast<int>(code)]; }

std::optional<FailureCode> parse_failure_code(std::string_view name) {
  for (int i = 0; i < 8; ++i) {
    if (kFailureNames[i] == name) return static_cast<FailureCode>(i);
  }
  return std::nullopt;
}

std::size_t count_blanks(std::string_view text) {
  std::size_t blanks = 0;
  std::size_t run = 0;
  for (char c : text) {
    if (c == '_') {
      ++run;
      continue;
    }
    if (run >= kBlankMarker.size()) ++blanks;
    run = 0;
  }
  if (run >= kBlankMarker.size()) ++blanks;
  return blanks;
}

Parsed<json> extract_json(std::string_view raw_text) {
  const std::string text = strip_fences(raw_text);
  const auto begin = text.find('{');
  if (begin == std::string::npos) return FailureCode::no_json;
  const auto end = balanced_end(text, begin);
  if (end == std::string_view::npos) return FailureCode::malformed_json;
  json value = json::parse(text.begin() + static_cast<std::ptrdiff_t>(begin),
                           text.begin() + static_cast<std::ptrdiff_t>(end), nullptr,
                           /*allow_exceptions=*/false);
  if (value.is_discarded() || !value.is_object()) return FailureCode::malformed_json;
  return value;
}

Parsed<ParsedQuestion> parse_question(const json& value, QuestionFormat expected,
                                      std::string_view source_digest) {
  if (!value.is_object()) return FailureCode::schema_mismatch;
  Parsed<QuestionPayload> payload = FailureCode::schema_mismatch;
  switch (expected) {
    case QuestionFormat::multiple_choice: payload = parse_mc(value); break;
    case QuestionFormat::multiple_select: payload = parse_ms(value); break;
    case QuestionFormat::true_false: payload = parse_tf(value); break;
    case QuestionFormat::fill_in_the_blank: payload = parse_fib(value); break;
    case QuestionFormat::free_response_essay: payload = parse_essay(value); break;
  }
  if (!payload) return payload.failure();
  return ParsedQuestion{expected, std::move(payload.value()), std::string(source_digest)};
}

Classification classify(std::string_view raw_text, QuestionFormat expected) {
  Classification out;
  auto extracted = extract_json(raw_text);
  if (!extracted) {
    out.validity = {false, std::nullopt, extracted.failure()};
    return out;
  }
  auto parsed = parse_question(extracted.value(), expected, sha256_hex(raw_text));
  if (!parsed) {
    out.validity = {true, false, parsed.failure()};
    return out;
  }
  out.validity = {true, true, std::nullopt};
  out.question = std::move(parsed.value());
  return out;
}

ValidityAggregate score_validity(std::span<const ScoredRecord> records) {
  if (records.empty()) throw EmptyBatch("score_validity needs at least one record");
  ValidityAggregate agg;
  agg.n = records.size();
  std::map<std::string, std::set<QuestionFormat>> valid_formats;
  for (const auto& r : records) {
    auto& formats = valid_formats[r.group];
    if (!r.validity.json_ok) continue;
    ++agg.n_json_ok;
    if (r.validity.format_ok.value_or(false)) {
      ++agg.n_format_ok;
      formats.insert(r.format);
    }
  }
  agg.json_accuracy = static_cast<double>(agg.n_json_ok) / static_cast<double>(agg.n);
  if (agg.n_json_ok > 0) {
    agg.format_accuracy =
        static_cast<double>(agg.n_format_ok) / static_cast<double>(agg.n_json_ok);
  }
  agg.n_groups = valid_formats.size();
  double total = 0.0;
  for (const auto& [_, formats] : valid_formats) total += static_cast<double>(formats.size());
  agg.existence_score = total / static_cast<double>(agg.n_groups);
  return agg;
}

json to_json(const ParsedQuestion& q) {
  json payload = json::object();
  std::visit(
      [&payload](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        payload["question"] = p.question;
        if constexpr (std::is_same_v<T, MultipleChoice>) {
          payload["options"] = p.options;
          payload["answer_index"] = p.answer_index;
          payload["explanation"] = p.explanation;
        } else if constexpr (std::is_same_v<T, MultipleSelect>) {
          payload["options"] = p.options;
          payload["answer_indices"] = p.answer_indices;
          payload["explanation"] = p.explanation;
        } else if constexpr (std::is_same_v<T, TrueFalse>) {
          payload["answer"] = p.answer;
          payload["explanation"] = p.explanation;
        } else if constexpr (std::is_same_v<T, FillInTheBlank>) {
          payload["answers"] = p.answers;
          payload["explanation"] = p.explanation;
        } else {
          payload["exemplar_points"] = p.exemplar_points;
        }
      },
      q.payload);
  json j = json::object();
  j["format"] = std::string(to_string(q.format));
  j["payload"] = std::move(payload);
  j["source_digest"] = q.source_digest;
  return j;
}

ParsedQuestion parsed_question_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format") || !j.contains("payload")) {
    throw FormatError("parsed question needs 'format' and 'payload'");
  }
  const auto format = parse_question_format(j["format"].get<std::string>());
  if (!format) throw FormatError("parsed question: unknown format");
  auto parsed = parse_question(j["payload"], *format, j.value("source_digest", ""));
  if (!parsed) {
    throw FormatError("parsed question payload invalid: " +
                      std::string(to_string(parsed.failure())));
  }
  return std::move(parsed.value());
}

json to_json(const ValidityRecord& v) {
  json j = json::object();
  j["json_ok"] = v.json_ok;
  j["format_ok"] = v.format_ok ? json(*v.format_ok) : json(nullptr);
  j["failure"] = v.failure ? json(std::string(to_string(*v.failure))) : json(nullptr);
  return j;
}

ValidityRecord validity_from_json(const json& j) {
  ValidityRecord v;
  v.json_ok = j.at("json_ok").get<bool>();
  if (!j.at("format_ok").is_null()) v.format_ok = j.at("format_ok").get<bool>();
  if (!j.at("failure").is_null()) {
    v.failure = parse_failure_code(j.at("failure").get<std::string>());
    if (!v.failure) throw FormatError("unknown failure code");
  }
  return v;
}

}  // namespace labqg
