#include <gtest/gtest.h>

#include <random>

#include "labqg/fixtures.hpp"
#include "labqg/taxonomy.hpp"
#include "oracles.hpp"

namespace labqg {
namespace {

const SimulationRepresentation& gas_law() {
  return fixture_conversations().front().conversation.representation;
}

TEST(Taxonomy, NamesRoundTrip) {
  for (auto t : kAllQuestionTypes) EXPECT_EQ(parse_question_type(to_string(t)), t);
  for (auto f : kAllQuestionFormats) EXPECT_EQ(parse_question_format(to_string(f)), f);
  EXPECT_FALSE(parse_question_type("essay"));
  EXPECT_EQ(to_string(QuestionFormat::free_response_essay), "free_response_essay");
  EXPECT_EQ(to_string(QuestionType::cause_and_effect), "cause_and_effect");
}

TEST(Taxonomy, FixtureSupportsEveryType) {
  EXPECT_EQ(supported_types(gas_law()).size(), 7u);
}

TEST(Taxonomy, SupportRules) {
  SimulationRepresentation s;
  s.sim_id = "one";
  s.knowledge_units = {{"x", "X", "", KuKind::input, json::object()}};
  EXPECT_EQ(supported_types(s), (std::set<QuestionType>{QuestionType::conceptual}));
  s.instruction_goals = "Goals.";
  EXPECT_EQ(supported_types(s),
            (std::set<QuestionType>{QuestionType::conceptual, QuestionType::critical_thinking}));
  EXPECT_THROW(context_for(s, QuestionType::relationship, 0), TypeUnsupported);
  EXPECT_THROW(context_for(s, QuestionType::causal_chain, 0), TypeUnsupported);
}

TEST(Taxonomy, ConceptualPicksKuByIdOrder) {
  SimulationRepresentation s;
  s.sim_id = "s";
  s.knowledge_units = {{"b", "B", "", KuKind::input, json::object()},
                       {"a", "A", "", KuKind::input, json::object()}};
  EXPECT_EQ(context_for(s, QuestionType::conceptual, 0).kus[0].id, "a");
  EXPECT_EQ(context_for(s, QuestionType::conceptual, 1).kus[0].id, "b");
  EXPECT_EQ(context_for(s, QuestionType::conceptual, 2).kus[0].id, "a");
}

TEST(Taxonomy, ChainPrefersPathsAcrossRelationships) {
  SimulationRepresentation s;
  s.sim_id = "s";
  s.instruction_goals = "g";
  for (auto id : {"a", "b", "c", "d"}) {
    s.knowledge_units.push_back({id, id, "", KuKind::input, json::object()});
  }
  s.relationships = {{"r1", "", "", {"a", "b"}, true, json::object()},
                     {"r2", "", "", {"b", "c"}, true, json::object()}};
  const auto slice = context_for(s, QuestionType::causal_chain, 0);
  EXPECT_EQ(*slice.chain_order, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(slice.rels.size(), 2u);
  EXPECT_EQ(slice.rels[0].id, "r1");
  EXPECT_EQ(slice.rels[1].id, "r2");
}

TEST(Taxonomy, ChainFallsBackToLongRelationship) {
  SimulationRepresentation s;
  s.sim_id = "s";
  for (auto id : {"a", "b", "c"}) {
    s.knowledge_units.push_back({id, id, "", KuKind::input, json::object()});
  }
  s.relationships = {{"r1", "", "", {"c", "a", "b"}, true, json::object()}};
  const auto slice = context_for(s, QuestionType::causal_chain, 3);
  EXPECT_EQ(*slice.chain_order, (std::vector<std::string>{"c", "a", "b"}));
  EXPECT_FALSE(check_slice(slice));
}

TEST(Taxonomy, CheckSliceRejectsBrokenShapes) {
  auto slice = context_for(gas_law(), QuestionType::conceptual, 0);
  slice.kus.push_back(slice.kus[0]);
  EXPECT_TRUE(check_slice(slice));
  auto chain = context_for(gas_law(), QuestionType::causal_chain, 0);
  chain.rels.clear();
  EXPECT_TRUE(check_slice(chain));
  auto ct = context_for(gas_law(), QuestionType::critical_thinking, 0);
  ct.goals_excerpt = " ";
  EXPECT_TRUE(check_slice(ct));
}

TEST(Taxonomy, SliceJsonRoundTrip) {
  for (auto t : kAllQuestionTypes) {
    const auto slice = context_for(gas_law(), t, 17);
    EXPECT_EQ(slice_from_json(json::parse(to_json(slice).dump())), slice);
  }
}

TEST(Taxonomy, SimplePathsMatchBruteForceOnFixtures) {
  for (const auto& f : fixture_conversations()) {
    const auto& s = f.conversation.representation;
    for (std::size_t n : {2u, 3u, 4u}) {
      EXPECT_EQ(simple_paths(ku_graph(s), n), testing::brute_force_paths(s, n))
          << f.conversation.conversation_id << " n=" << n;
    }
  }
}

// Slice invariants, chain enumeration and determinism over random inputs.
TEST(TaxonomyProperty, ThousandRandomRepresentations) {
  std::mt19937_64 rng(20240601);
  std::size_t chains = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = testing::random_representation(rng, 8, 6);
    ASSERT_TRUE(validate_representation(s).empty());
    const auto paths3 = testing::brute_force_paths(s, 3);
    ASSERT_EQ(simple_paths(ku_graph(s), 3), paths3) << to_json(s).dump();
    const auto types = supported_types(s);
    ASSERT_EQ(types.contains(QuestionType::causal_chain), !paths3.empty());
    ASSERT_EQ(types.contains(QuestionType::relationship), !s.relationships.empty());
    ASSERT_EQ(types.contains(QuestionType::critical_thinking), !is_blank(s.instruction_goals));
    ASSERT_TRUE(types.contains(QuestionType::conceptual));
    const std::uint64_t seed = rng();
    for (auto t : kAllQuestionTypes) {
      if (!types.contains(t)) {
        EXPECT_THROW(context_for(s, t, seed), TypeUnsupported);
        continue;
      }
      const auto slice = context_for(s, t, seed);
      ASSERT_FALSE(check_slice(slice)) << *check_slice(slice);
      const auto independent = testing::independent_slice_check(s, slice);
      ASSERT_FALSE(independent) << *independent << "\n" << to_json(s).dump();
      ASSERT_EQ(context_for(s, t, seed), slice);
      if (t == QuestionType::causal_chain) {
        ++chains;
        const auto& order = *slice.chain_order;
        if (order.size() == 3) {
          const std::vector<std::string> rev(order.rbegin(), order.rend());
          const bool listed = std::find(paths3.begin(), paths3.end(), order) != paths3.end() ||
                              std::find(paths3.begin(), paths3.end(), rev) != paths3.end();
          ASSERT_TRUE(listed);
        }
      }
    }
  }
  EXPECT_GT(chains, 100u);
}

}  // namespace
}  // namespace labqg
