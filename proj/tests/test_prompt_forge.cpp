#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "labqg/fixtures.hpp"
#include "labqg/prompt_forge.hpp"
#include "oracles.hpp"

namespace labqg {
namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// True when `small` appears in order inside `big`.
bool is_subsequence(const std::vector<std::string>& small, const std::vector<std::string>& big) {
  std::size_t j = 0;
  for (const auto& line : big) {
    if (j < small.size() && small[j] == line) ++j;
  }
  return j == small.size();
}

void expect_monotone(const ContextSlice& slice, QuestionFormat format) {
  std::optional<PromptPackage> prev;
  for (auto level : kAllTelerLevels) {
    const auto pkg = build_prompt(slice, format, level);
    EXPECT_EQ(pkg.level, level);
    EXPECT_EQ(pkg.schema_id, schema_for(format).schema_id);
    EXPECT_NE(pkg.prompt_text.find("Schema id: " + pkg.schema_id), std::string::npos);
    const auto ids = slice_element_ids(slice);
    EXPECT_TRUE(std::includes(ids.begin(), ids.end(), pkg.element_manifest.begin(),
                              pkg.element_manifest.end()));
    for (const auto& ku : slice.kus) {
      EXPECT_NE(pkg.prompt_text.find("[" + ku.id + "]"), std::string::npos);
    }
    if (prev) {
      EXPECT_TRUE(std::includes(pkg.element_manifest.begin(), pkg.element_manifest.end(),
                                prev->element_manifest.begin(), prev->element_manifest.end()));
      EXPECT_GE(pkg.prompt_text.size(), prev->prompt_text.size());
      EXPECT_TRUE(is_subsequence(lines_of(prev->prompt_text), lines_of(pkg.prompt_text)))
          << to_string(level);
    }
    prev = pkg;
  }
}

TEST(PromptForge, LevelNames) {
  for (auto l : kAllTelerLevels) EXPECT_EQ(parse_teler_level(to_string(l)), l);
  EXPECT_EQ(parse_teler_level("3"), TelerLevel::L3);
  EXPECT_FALSE(parse_teler_level("L5"));
  EXPECT_FALSE(parse_teler_level("0"));
}

TEST(PromptForge, LevelSectionsAppearInOrder) {
  const auto& s = fixture_conversations().front().conversation.representation;
  const auto slice = context_for(s, QuestionType::relationship, 0);
  const auto l1 = build_prompt(slice, QuestionFormat::true_false, TelerLevel::L1).prompt_text;
  const auto l4 = build_prompt(slice, QuestionFormat::true_false, TelerLevel::L4).prompt_text;
  EXPECT_EQ(l1.find("Task details:"), std::string::npos);
  EXPECT_EQ(l1.find("Considerations:"), std::string::npos);
  EXPECT_LT(l4.find("Task details:"), l4.find("Considerations:"));
  EXPECT_LT(l4.find("Considerations:"), l4.find("Characteristics of an ideal response:"));
}

TEST(PromptForge, MonotoneOnAllFixtureSlices) {
  for (const auto& f : fixture_conversations()) {
    const auto& s = f.conversation.representation;
    for (auto t : supported_types(s)) {
      for (std::uint64_t seed : {0u, 1u, 7u}) {
        const auto slice = context_for(s, t, seed);
        for (auto fmt : kAllQuestionFormats) expect_monotone(slice, fmt);
      }
    }
  }
}

TEST(PromptForgeProperty, MonotoneOnRandomSlices) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto s = testing::random_representation(rng);
    for (auto t : supported_types(s)) {
      const auto slice = context_for(s, t, rng());
      expect_monotone(slice, kAllQuestionFormats[rng() % 5]);
    }
  }
}

TEST(PromptForge, DigestIsStableAndSensitive) {
  const auto& s = fixture_conversations().front().conversation.representation;
  auto slice = context_for(s, QuestionType::conceptual, 0);
  EXPECT_EQ(slice_digest(slice), slice_digest(slice));
  const auto before = slice_digest(slice);
  slice.goals_excerpt += ".";
  EXPECT_NE(slice_digest(slice), before);
}

std::filesystem::path golden_dir() {
  return std::filesystem::path(LABQG_TEST_DATA_DIR) / "golden" / "prompts";
}

void check_golden(const std::string& name, const std::string& text) {
  const auto path = golden_dir() / (name + ".txt");
  if (std::getenv("UPDATE_GOLDEN") != nullptr) {
    std::filesystem::create_directories(golden_dir());
    std::ofstream(path, std::ios::binary) << text;
    return;
  }
  std::ifstream in(path, std::ios::binary);
  ASSERT_TRUE(in) << "missing golden " << path << " (run with UPDATE_GOLDEN=1)";
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), text) << name;
}

TEST(PromptForgeGolden, GasLawPrompts) {
  const auto& s = fixture_conversations().front().conversation.representation;
  for (auto t : kAllQuestionTypes) {
    const auto slice = context_for(s, t, 0);
    for (auto level : kAllTelerLevels) {
      check_golden(std::string(to_string(t)) + "." + std::string(to_string(level)) +
                       ".multiple_choice",
                   build_prompt(slice, QuestionFormat::multiple_choice, level).prompt_text);
    }
  }
  const auto chain = context_for(s, QuestionType::causal_chain, 0);
  for (auto fmt : kAllQuestionFormats) {
    check_golden("causal_chain.L4." + std::string(to_string(fmt)),
                 build_prompt(chain, fmt, TelerLevel::L4).prompt_text);
  }
}

}  // namespace
}  // namespace labqg
