#include "labqg/fixtures.hpp"

#include <string_view>

namespace labqg {

namespace detail {
const std::vector<std::string_view>& embedded_conversations();
}

FixtureConversation fixture_from_json(const json& j) {
  try {
    FixtureConversation f;
    for (const auto& t : j.at("turns")) {
      f.turns.emplace_back(t.at("prompt").get<std::string>(), t.at("answer").get<std::string>());
    }
    f.conversation.conversation_id = j.at("conversation_id").get<std::string>();
    f.conversation.seed = j.at("seed").get<std::uint64_t>();
    f.conversation.representation =
        representation_from_json(j.at("representation"), ParseMode::strict);
    require_valid(f.conversation.representation);
    return f;
  } catch (const json::exception& e) {
    throw FormatError(std::string("fixture conversation: ") + e.what());
  }
}

const std::vector<FixtureConversation>& fixture_conversations() {
  static const std::vector<FixtureConversation> all = [] {
    std::vector<FixtureConversation> out;
    for (auto text : detail::embedded_conversations()) {
      out.push_back(fixture_from_json(json::parse(text)));
    }
    return out;
  }();
  return all;
}

std::vector<PlanConversation> fixture_plan_conversations(std::size_t count) {
  const auto& all = fixture_conversations();
  if (count > all.size()) {
    throw PreconditionError("only " + std::to_string(all.size()) +
                            " fixture conversations are available");
  }
  std::vector<PlanConversation> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(all[i].conversation);
  return out;
}

}  // namespace labqg
