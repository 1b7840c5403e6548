#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "labqg/answer_parser.hpp"

namespace labqg {
namespace {

struct CorpusItem {
  std::string raw;
  QuestionFormat format;
  std::optional<FailureCode> failure;
};

std::vector<CorpusItem> load_corpus() {
  std::ifstream in(std::string(LABQG_TEST_DATA_DIR) + "/fixtures/defect_corpus.jsonl");
  std::vector<CorpusItem> items;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    CorpusItem item{j["raw"], *parse_question_format(j["expected_format"].get<std::string>()),
                    std::nullopt};
    if (!j["expected_failure"].is_null()) {
      item.failure = parse_failure_code(j["expected_failure"].get<std::string>());
      EXPECT_TRUE(item.failure) << line;
    }
    items.push_back(std::move(item));
  }
  return items;
}

TEST(AnswerParser, DefectCorpusMatchesLabels) {
  const auto items = load_corpus();
  ASSERT_EQ(items.size(), 50u);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto c = classify(items[i].raw, items[i].format);
    EXPECT_EQ(c.validity.failure, items[i].failure) << "item " << i << ": " << items[i].raw;
    EXPECT_EQ(c.question.has_value(), !items[i].failure);
    const bool json_failure = items[i].failure == FailureCode::no_json ||
                              items[i].failure == FailureCode::malformed_json;
    EXPECT_EQ(c.validity.json_ok, !json_failure);
    if (!json_failure) EXPECT_EQ(c.validity.format_ok, !items[i].failure);
  }
}

TEST(AnswerParser, CorpusCoversEveryFailureCode) {
  std::set<FailureCode> seen;
  for (const auto& item : load_corpus()) {
    if (item.failure) seen.insert(*item.failure);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(AnswerParser, CountBlanks) {
  EXPECT_EQ(count_blanks(""), 0u);
  EXPECT_EQ(count_blanks("___"), 0u);
  EXPECT_EQ(count_blanks("____"), 1u);
  EXPECT_EQ(count_blanks("a ________ b ____"), 2u);
  EXPECT_EQ(count_blanks("snake_case_name"), 0u);
}

TEST(AnswerParser, ExtractJsonTakesFirstBalancedObject) {
  auto r = extract_json("noise {\"a\": \"}\"} {\"b\": 1}");
  ASSERT_TRUE(r);
  EXPECT_EQ(r.value()["a"], "}");
  EXPECT_EQ(extract_json("{\"a\": 1").failure(), FailureCode::malformed_json);
  EXPECT_EQ(extract_json("plain").failure(), FailureCode::no_json);
  EXPECT_TRUE(extract_json("```\n{\"x\": [1, {\"y\": 2}]}\n```"));
}

TEST(AnswerParser, ParsedQuestionRoundTrip) {
  const auto c = classify(
      R"({"question":"Pick two.","options":["a","b","c","d"],"answer_indices":[1,2],"explanation":"e"})",
      QuestionFormat::multiple_select);
  ASSERT_TRUE(c.question);
  EXPECT_EQ(parsed_question_from_json(json::parse(to_json(*c.question).dump())), *c.question);
  const ValidityRecord v{true, false, FailureCode::empty_field};
  EXPECT_EQ(validity_from_json(to_json(v)), v);
}

TEST(AnswerParser, SchemasAreRegistered) {
  for (auto f : kAllQuestionFormats) {
    const auto& s = schema_for(f);
    EXPECT_EQ(s.format, f);
    EXPECT_EQ(find_schema(s.schema_id), &s);
    EXPECT_EQ(schema_skeleton(s).front(), '{');
  }
}

ScoredRecord rec(std::string group, QuestionFormat f, std::optional<FailureCode> failure) {
  ValidityRecord v;
  if (failure == FailureCode::no_json || failure == FailureCode::malformed_json) {
    v = {false, std::nullopt, failure};
  } else {
    v = {true, !failure.has_value(), failure};
  }
  return {std::move(group), f, v};
}

using QF = QuestionFormat;

TEST(ScoreValidity, AllValidGivesFive) {
  std::vector<ScoredRecord> r;
  for (auto f : kAllQuestionFormats) r.push_back(rec("g", f, std::nullopt));
  const auto a = score_validity(r);
  EXPECT_EQ(a.json_accuracy, 1.0);
  EXPECT_EQ(a.format_accuracy, 1.0);
  EXPECT_EQ(a.existence_score, 5.0);
}

TEST(ScoreValidity, AllExceptEssayGivesFour) {
  std::vector<ScoredRecord> r = {
      rec("g", QF::multiple_choice, std::nullopt), rec("g", QF::multiple_select, std::nullopt),
      rec("g", QF::true_false, std::nullopt), rec("g", QF::fill_in_the_blank, std::nullopt),
      rec("g", QF::free_response_essay, FailureCode::schema_mismatch)};
  const auto a = score_validity(r);
  EXPECT_EQ(a.json_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(*a.format_accuracy, 0.8);
  EXPECT_EQ(a.existence_score, 4.0);
}

TEST(ScoreValidity, MixedGroups) {
  // n=5, 4 parse, 3 match; g1 {mc}, g2 {mc}.
  std::vector<ScoredRecord> r = {rec("g1", QF::multiple_choice, std::nullopt),
                                 rec("g1", QF::true_false, FailureCode::no_json),
                                 rec("g2", QF::multiple_choice, std::nullopt),
                                 rec("g2", QF::multiple_choice, std::nullopt),
                                 rec("g2", QF::multiple_select, FailureCode::schema_mismatch)};
  const auto a = score_validity(r);
  EXPECT_DOUBLE_EQ(a.json_accuracy, 0.8);
  EXPECT_DOUBLE_EQ(*a.format_accuracy, 0.75);
  EXPECT_DOUBLE_EQ(a.existence_score, 1.0);
  EXPECT_EQ(a.n_groups, 2u);
}

TEST(ScoreValidity, EmptyGroupCountsAsZero) {
  std::vector<ScoredRecord> r = {rec("g1", QF::multiple_choice, FailureCode::no_json),
                                 rec("g1", QF::true_false, FailureCode::malformed_json),
                                 rec("g2", QF::true_false, std::nullopt)};
  const auto a = score_validity(r);
  EXPECT_DOUBLE_EQ(a.json_accuracy, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*a.format_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(a.existence_score, 0.5);
}

TEST(ScoreValidity, NothingParsedLeavesFormatAbsent) {
  std::vector<ScoredRecord> r = {rec("g", QF::true_false, FailureCode::no_json)};
  const auto a = score_validity(r);
  EXPECT_EQ(a.json_accuracy, 0.0);
  EXPECT_FALSE(a.format_accuracy);
  EXPECT_EQ(a.existence_score, 0.0);
  EXPECT_THROW(score_validity({}), EmptyBatch);
}

TEST(AnswerParserFuzz, RandomBytesNeverCrash) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(0, 256);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 20000; ++i) {
    std::string raw(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& c : raw) c = static_cast<char>(byte(rng));
    for (auto f : kAllQuestionFormats) {
      const auto c = classify(raw, f);
      EXPECT_EQ(c.question.has_value(), c.validity.format_ok.value_or(false));
    }
  }
}

TEST(AnswerParserFuzz, MutatedValidJsonNeverCrashes) {
  const std::string seed =
      R"({"question":"Q ____?","options":["a","b","c","d"],"answer_index":1,"answers":["x"],)"
      R"("answer":true,"answer_indices":[0],"exemplar_points":["p"],"explanation":"e"})";
  const std::string alphabet = "{}[]\",:\\_ 0123456789-.etrufalsn";
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20000; ++i) {
    std::string raw = seed;
    const int edits = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int e = 0; e < edits && !raw.empty(); ++e) {
      const auto pos = std::uniform_int_distribution<std::size_t>(0, raw.size() - 1)(rng);
      const char c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      switch (rng() % 3) {
        case 0: raw[pos] = c; break;
        case 1: raw.insert(raw.begin() + static_cast<std::ptrdiff_t>(pos), c); break;
        default: raw.erase(pos, 1); break;
      }
    }
    for (auto f : kAllQuestionFormats) (void)classify(raw, f);
  }
}

}  // namespace
}  // namespace labqg
