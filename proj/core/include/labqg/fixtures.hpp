#pragma once

#include <string>
#include <utility>
#include <vector>

#include "labqg/bench.hpp"

namespace labqg {

/// A synthetic teacher conversation shipped with the library, with the
/// representation a teacher would commit after reviewing the extraction.
struct FixtureConversation {
  std::vector<std::pair<std::string, std::string>> turns;  // (prompt, answer)
  PlanConversation conversation;
};

/// The eight built-in conversations over five simulations, in a fixed order.
const std::vector<FixtureConversation>& fixture_conversations();

/// The first `count` fixture conversations as plan inputs.
std::vector<PlanConversation> fixture_plan_conversations(std::size_t count);

FixtureConversation fixture_from_json(const json& j);

}  // namespace labqg
