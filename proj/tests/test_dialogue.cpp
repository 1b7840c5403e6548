#include <gtest/gtest.h>

#include <deque>
#include <mutex>

#include "labqg/dialogue.hpp"
#include "labqg/fixtures.hpp"

namespace labqg {
namespace {

// Replies with a fixed script of message contents, then repeats the last.
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  TransportResult post(const ModelConfig&, const std::string& body) override {
    std::lock_guard lock(mu_);
    bodies.push_back(body);
    const auto& text = replies_[std::min(calls_++, replies_.size() - 1)];
    json reply = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}};
    return {TransportStatus::ok, 200, reply.dump(), ""};
  }
  std::vector<std::string> bodies;

 private:
  std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
};

class FailingTransport : public ChatTransport {
 public:
  TransportResult post(const ModelConfig&, const std::string&) override {
    return {TransportStatus::connect_error, 0, "", "refused"};
  }
};

ModelConfig model(std::string url = "mock://perfect") {
  ModelConfig cfg;
  cfg.name = cfg.model_id = "m";
  cfg.endpoint_url = std::move(url);
  return cfg;
}

DialogueSession answered_session() {
  auto s = start_session("gas-law", "Gas lab", "s1");
  s = record_answer(s, "Temperature, pressure, particle speed");
  s = record_answer(s, "Kelvin scale");
  s = skip_prompt(s);
  return s;
}

const std::string kProposal = R"({
  "instruction_goals": "Relate temperature and pressure.",
  "knowledge_units": [
    {"id": "t", "name": "Temperature", "kind": "input", "source_turn": 0},
    {"id": "p", "name": "Pressure", "kind": "OUTPUT"},
    {"id": "k", "name": "Kelvin", "kind": "mystery", "source_turn": 9}
  ],
  "relationships": [
    {"label": "heating raises pressure", "members": ["t", "pressure", "ghost"], "directed": true},
    {"label": "lonely", "members": ["t", "nobody"]}
  ]
})";

TEST(Dialogue, GuidedPromptsInOrder) {
  auto s = start_session("sim", "t");
  EXPECT_EQ(s.status, SessionStatus::open);
  EXPECT_FALSE(s.session_id.empty());
  for (auto prompt : kGuidedPrompts) {
    ASSERT_EQ(current_prompt(s), std::string(prompt));
    s = record_answer(s, "an answer");
  }
  EXPECT_FALSE(current_prompt(s));
  EXPECT_THROW(record_answer(s, "more"), NoPendingPrompt);
  s = add_followup(s, "Anything else?");
  EXPECT_EQ(current_prompt(s), "Anything else?");
  EXPECT_THROW(start_session("", "t"), PreconditionError);
}

TEST(Dialogue, AnswerRules) {
  auto s = start_session("sim", "t");
  EXPECT_THROW(record_answer(s, "   "), EmptyAnswer);
  s = skip_prompt(s);
  ASSERT_EQ(s.turns.size(), 1u);
  EXPECT_TRUE(s.turns[0].skipped);
  EXPECT_EQ(s.turns[0].answer, "");
  s.status = SessionStatus::committed;
  EXPECT_THROW(record_answer(s, "x"), SessionClosed);
}

TEST(Dialogue, ExtractionPromptListsAnsweredTurns) {
  const auto p = extraction_prompt(answered_session());
  EXPECT_NE(p.find("Temperature, pressure, particle speed"), std::string::npos);
  EXPECT_NE(p.find("Representation schema:"), std::string::npos);
  EXPECT_NE(p.find(kGuidedPrompts[0]), std::string::npos);
}

TEST(Dialogue, ProposalMappingAssignsIdsAndNotes) {
  const auto draft = draft_from_proposal(answered_session(), json::parse(kProposal));
  ASSERT_TRUE(draft);
  const auto& s = draft->base;
  EXPECT_EQ(s.sim_id, "gas-law");
  ASSERT_EQ(s.knowledge_units.size(), 3u);
  EXPECT_EQ(s.knowledge_units[0].id, "ku-1");
  EXPECT_EQ(s.knowledge_units[1].kind, KuKind::output);
  EXPECT_EQ(s.knowledge_units[2].kind, KuKind::observable);
  ASSERT_EQ(s.relationships.size(), 1u);
  EXPECT_EQ(s.relationships[0].id, "rel-1");
  EXPECT_EQ(s.relationships[0].members, (std::vector<std::string>{"ku-1", "ku-2"}));
  EXPECT_TRUE(s.relationships[0].directed);
  EXPECT_EQ(draft->provenance.at("ku-1"), 0u);
  EXPECT_EQ(draft->provenance.at("ku-2"), 0u);  // inferred from answer text
  EXPECT_EQ(draft->provenance.at("ku-3"), 1u);  // "Kelvin" appears in turn 1
  EXPECT_FALSE(draft->confidence_notes.empty());
  EXPECT_TRUE(validate_representation(s).empty());
  EXPECT_EQ(draft_from_json(json::parse(to_json(*draft).dump())), *draft);
}

TEST(Dialogue, UnmappableProposals) {
  const auto s = answered_session();
  EXPECT_FALSE(draft_from_proposal(s, json::array()));
  EXPECT_FALSE(draft_from_proposal(s, json::parse(R"({"knowledge_units": []})")));
  EXPECT_FALSE(draft_from_proposal(s, json::parse(R"({"knowledge_units": [{"id": "x"}]})")));
}

TEST(Dialogue, ExtractWithMock) {
  Gateway gw;
  const auto e = extract_structure(answered_session(), gw, model());
  EXPECT_EQ(e.session.status, SessionStatus::review);
  EXPECT_EQ(e.attempts, 1);
  EXPECT_GE(e.draft.base.knowledge_units.size(), 2u);
  EXPECT_TRUE(validate_representation(e.draft.base).empty());
}

TEST(Dialogue, ExtractRetriesOnceThenSucceeds) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"I am not sure.", kProposal});
  Gateway gw(t);
  const auto e = extract_structure(answered_session(), gw, model("http://scripted"));
  EXPECT_EQ(e.attempts, 2);
  EXPECT_EQ(t->bodies.size(), 2u);
}

TEST(Dialogue, ExtractGivesUpAfterRetry) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"nope"});
  Gateway gw(t);
  EXPECT_THROW(extract_structure(answered_session(), gw, model("http://scripted")),
               ExtractionUnparsable);
  EXPECT_EQ(t->bodies.size(), 2u);
}

TEST(Dialogue, ExtractPreconditions) {
  Gateway gw(std::make_shared<FailingTransport>());
  EXPECT_THROW(extract_structure(answered_session(), gw, model("http://down")), GatewayError);
  auto empty = skip_prompt(start_session("sim", "t"));
  Gateway mock;
  EXPECT_THROW(extract_structure(empty, mock, model()), PreconditionError);
  auto closed = answered_session();
  closed.status = SessionStatus::committed;
  EXPECT_THROW(extract_structure(closed, mock, model()), InvalidState);
}

class EditsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    session = answered_session();
    session.status = SessionStatus::review;
    draft = *draft_from_proposal(session, json::parse(kProposal));
  }
  DialogueSession session;
  DraftRepresentation draft;
};

TEST_F(EditsTest, CommitWithoutEditsKeepsDraft) {
  const auto c = apply_teacher_edits(session, draft, {});
  EXPECT_EQ(c.representation, draft.base);
  EXPECT_EQ(c.session.status, SessionStatus::committed);
  EXPECT_EQ(c.provenance.at("ku-1"), (Origin{Origin::Source::turn, 0}));
  EXPECT_THROW(apply_teacher_edits(c.session, draft, {}), SessionClosed);
}

TEST_F(EditsTest, EditsApplyInOrder) {
  const std::vector<TeacherEdit> edits = {
      AddKnowledgeUnit{std::string("volume"), "Volume", "Container size", KuKind::input},
      AddRelationship{std::nullopt, "Boyle", "", {"volume", "ku-2"}, false},
      UpdateKnowledgeUnit{"ku-3", std::string("Absolute temperature"), std::nullopt, KuKind::constant},
      SetGoals{"New goals."},
  };
  const auto c = apply_teacher_edits(session, draft, edits);
  const auto& s = c.representation;
  EXPECT_EQ(s.instruction_goals, "New goals.");
  ASSERT_NE(s.find_ku("volume"), nullptr);
  EXPECT_EQ(s.find_ku("ku-3")->name, "Absolute temperature");
  EXPECT_EQ(s.find_ku("ku-3")->kind, KuKind::constant);
  EXPECT_EQ(s.relationships.size(), 2u);
  EXPECT_EQ(c.provenance.at("volume"), (Origin{Origin::Source::edit, 0}));
}

TEST_F(EditsTest, DeleteReferencedKuNeedsCascade) {
  const std::vector<TeacherEdit> plain = {DeleteKnowledgeUnit{"ku-1", false}};
  try {
    apply_teacher_edits(session, draft, plain);
    FAIL();
  } catch (const EditConflict& e) {
    EXPECT_NE(std::string(e.what()).find("rel-1"), std::string::npos);
  }
  const std::vector<TeacherEdit> cascade = {DeleteKnowledgeUnit{"ku-1", true}};
  const auto c = apply_teacher_edits(session, draft, cascade);
  EXPECT_EQ(c.representation.find_ku("ku-1"), nullptr);
  EXPECT_TRUE(c.representation.relationships.empty());  // left with one member
}

TEST_F(EditsTest, InvalidEditsFail) {
  const std::vector<TeacherEdit> unknown = {UpdateKnowledgeUnit{"nope", std::nullopt, std::nullopt, std::nullopt}};
  EXPECT_THROW(apply_teacher_edits(session, draft, unknown), ValidationFailed);
  const std::vector<TeacherEdit> dangling = {AddRelationship{std::nullopt, "x", "", {"ku-1", "ghost"}, false}};
  EXPECT_THROW(apply_teacher_edits(session, draft, dangling), ValidationFailed);
  const std::vector<TeacherEdit> dup = {AddKnowledgeUnit{std::string("ku-1"), "Dup", "", KuKind::input}};
  EXPECT_THROW(apply_teacher_edits(session, draft, dup), ValidationFailed);
  auto open = session;
  open.status = SessionStatus::open;
  EXPECT_THROW(apply_teacher_edits(open, draft, {}), InvalidState);
}

TEST(Dialogue, EditJsonRoundTrip) {
  const std::vector<json> docs = {
      json::parse(R"({"op":"add_ku","id":"x","name":"X","description":"","kind":"input"})"),
      json::parse(R"({"op":"delete_ku","id":"x","cascade":true})"),
      json::parse(R"({"op":"add_relationship","label":"l","description":"","members":["a","b"],"directed":true})"),
      json::parse(R"({"op":"set_goals","text":"g"})"),
  };
  for (const auto& d : docs) {
    const auto edit = edit_from_json(d);
    EXPECT_EQ(to_json(edit_from_json(to_json(edit))), to_json(edit));
  }
  EXPECT_THROW(edit_from_json(json::parse(R"({"op":"explode"})")), FormatError);
  EXPECT_THROW(edit_from_json(json::parse(R"({"op":"delete_ku"})")), FormatError);
}

TEST(Dialogue, SessionJsonRoundTrip) {
  const auto s = answered_session();
  EXPECT_EQ(session_from_json(json::parse(to_json(s).dump())), s);
}

TEST(Fixtures, EightConversationsReplayThroughDialogue) {
  const auto& all = fixture_conversations();
  ASSERT_EQ(all.size(), 8u);
  Gateway gw;
  for (const auto& f : all) {
    auto s = start_session(f.conversation.representation.sim_id, f.conversation.representation.title);
    for (const auto& [prompt, answer] : f.turns) {
      if (!current_prompt(s)) s = add_followup(s, prompt);
      s = record_answer(s, answer);
    }
    const auto e = extract_structure(s, gw, model());
    EXPECT_EQ(e.draft.base.sim_id, f.conversation.representation.sim_id);
  }
  EXPECT_THROW(fixture_plan_conversations(9), PreconditionError);
  EXPECT_EQ(fixture_plan_conversations(3).size(), 3u);
}

}  // namespace
}  // namespace labqg
