#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "labqg/gateway.hpp"
#include "labqg/sim_model.hpp"

namespace labqg {

/// The three seed prompts, asked in this order.
inline constexpr std::array<std::string_view, 3> kGuidedPrompts = {
    "What are the key concepts or phenomena you want students to explore in this simulation?",
    "What prior knowledge do students bring into the activity?",
    "What kinds of reasoning or analysis should students practice?",
};

enum class SessionStatus { open, extracting, review, committed };

std::string_view to_string(SessionStatus s);

struct Turn {
  std::string prompt;
  std::string answer;
  std::string timestamp;
  bool skipped = false;
  bool operator==(const Turn&) const = default;
};

struct DialogueSession {
  std::string session_id;
  std::string sim_ref;
  std::string title;
  std::vector<Turn> turns;
  std::vector<std::string> pending;  // front is the prompt being asked
  SessionStatus status = SessionStatus::open;
  bool operator==(const DialogueSession&) const = default;
};

/// Opens a session with the guided prompts queued. Throws PreconditionError
/// on an empty sim_id.
DialogueSession start_session(std::string_view sim_id, std::string_view title,
                              std::string session_id = {});

std::optional<std::string> current_prompt(const DialogueSession& session);

/// Appends (pending prompt, answer) and dequeues the prompt.
/// Throws SessionClosed, NoPendingPrompt or EmptyAnswer.
DialogueSession record_answer(const DialogueSession& session, std::string_view answer);

/// Records the pending prompt as skipped (empty answer, flagged).
DialogueSession skip_prompt(const DialogueSession& session);

/// Queues a caller-supplied follow-up prompt.
DialogueSession add_followup(const DialogueSession& session, std::string_view prompt);

struct DraftRepresentation {
  SimulationRepresentation base;
  std::map<std::string, std::size_t> provenance;  // element id -> turn index
  std::vector<std::string> confidence_notes;
  bool operator==(const DraftRepresentation&) const = default;
};

/// The fixed prompt that asks a model to map the transcript onto a
/// representation.
std::string extraction_prompt(const DialogueSession& session);

/// Maps a model's JSON proposal onto a draft with system-assigned ids.
/// Returns nullopt when the proposal cannot be mapped onto a valid
/// representation.
std::optional<DraftRepresentation> draft_from_proposal(const DialogueSession& session,
                                                       const json& proposal);

struct Extraction {
  DialogueSession session;  // status review
  DraftRepresentation draft;
  int attempts = 1;
};

/// One model call, plus one retry when the reply cannot be mapped. Throws
/// PreconditionError (no answered turn), InvalidState, GatewayError or
/// ExtractionUnparsable. Never commits.
Extraction extract_structure(const DialogueSession& session, Gateway& gateway,
                             const ModelConfig& model);

// Teacher edits --------------------------------------------------------------

struct AddKnowledgeUnit {
  std::optional<std::string> id;
  std::string name;
  std::string description;
  KuKind kind = KuKind::observable;
};

struct UpdateKnowledgeUnit {
  std::string id;
  std::optional<std::string> name;
  std::optional<std::string> description;
  std::optional<KuKind> kind;
};

struct DeleteKnowledgeUnit {
  std::string id;
  bool cascade = false;  // also drop the KU from relationships
};

struct AddRelationship {
  std::optional<std::string> id;
  std::string label;
  std::string description;
  std::vector<std::string> members;
  bool directed = false;
};

struct UpdateRelationship {
  std::string id;
  std::optional<std::string> label;
  std::optional<std::string> description;
  std::optional<std::vector<std::string>> members;
  std::optional<bool> directed;
};

struct DeleteRelationship {
  std::string id;
};

struct SetGoals {
  std::string text;
};

using TeacherEdit = std::variant<AddKnowledgeUnit, UpdateKnowledgeUnit, DeleteKnowledgeUnit,
                                 AddRelationship, UpdateRelationship, DeleteRelationship, SetGoals>;

TeacherEdit edit_from_json(const json& j);
json to_json(const TeacherEdit& edit);

struct Origin {
  enum class Source { turn, edit };
  Source source = Source::turn;
  std::size_t index = 0;
  bool operator==(const Origin&) const = default;
};

struct CommittedRepresentation {
  SimulationRepresentation representation;
  std::map<std::string, Origin> provenance;
  DialogueSession session;  // status committed
};

/// Applies the edits in order and commits. Throws InvalidState (session not
/// in review), SessionClosed (already committed), EditConflict or
/// ValidationFailed.
CommittedRepresentation apply_teacher_edits(const DialogueSession& session,
                                            const DraftRepresentation& draft,
                                            std::span<const TeacherEdit> edits);

json to_json(const DialogueSession& s);
DialogueSession session_from_json(const json& j);
json to_json(const DraftRepresentation& d);
DraftRepresentation draft_from_json(const json& j);
json provenance_to_json(const std::map<std::string, Origin>& provenance);

}  // namespace labqg
