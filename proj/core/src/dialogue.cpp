#include "labqg/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace labqg {

namespace {

constexpr std::string_view kStatusNames[] = {"open", "extracting", "review", "committed"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void require_open(const DialogueSession& session) {
  if (session.status != SessionStatus::open) {
    throw SessionClosed("session " + session.session_id + " is " +
                        std::string(to_string(session.status)));
  }
}

std::vector<std::size_t> answered_turns(const DialogueSession& session) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    if (!session.turns[i].skipped && !is_blank(session.turns[i].answer)) out.push_back(i);
  }
  return out;
}

std::string next_id(std::string_view prefix, const std::set<std::string>& taken) {
  for (std::size_t n = 1;; ++n) {
    std::string id = std::string(prefix) + "-" + std::to_string(n);
    if (!taken.contains(id)) return id;
  }
}

std::set<std::string> all_ids(const SimulationRepresentation& s) {
  std::set<std::string> ids;
  for (const auto& ku : s.knowledge_units) ids.insert(ku.id);
  for (const auto& rel : s.relationships) ids.insert(rel.id);
  return ids;
}

template <class T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

KuKind kind_from(const json& j, const char* key, KuKind fallback) {
  if (!j.contains(key)) return fallback;
  const auto kind = parse_ku_kind(j[key].get<std::string>());
  if (!kind) throw FormatError("unknown knowledge unit kind '" + j[key].get<std::string>() + "'");
  return *kind;
}

}  // namespace

std::string_view to_string(SessionStatus s) { return kStatusNames[static_cast<int>(s)]; }

DialogueSession start_session(std::string_view sim_id, std::string_view title,
                              std::string session_id) {
  if (is_blank(sim_id)) throw PreconditionError("sim_id must not be empty");
  DialogueSession s;
  s.session_id = session_id.empty() ? random_token("sess") : std::move(session_id);
  s.sim_ref = sim_id;
  s.title = title;
  for (auto p : kGuidedPrompts) s.pending.emplace_back(p);
  return s;
}

std::optional<std::string> current_prompt(const DialogueSession& session) {
  if (session.pending.empty()) return std::nullopt;
  return session.pending.front();
}

DialogueSession record_answer(const DialogueSession& session, std::string_view answer) {
  require_open(session);
  if (session.pending.empty()) throw NoPendingPrompt("no prompt is waiting for an answer");
  if (is_blank(answer)) throw EmptyAnswer("answer is empty; use skip to pass on a prompt");
  DialogueSession next = session;
  next.turns.push_back({next.pending.front(), std::string(answer), utc_now_iso8601(), false});
  next.pending.erase(next.pending.begin());
  return next;
}

DialogueSession skip_prompt(const DialogueSession& session) {
  require_open(session);
  if (session.pending.empty()) throw NoPendingPrompt("no prompt is waiting for an answer");
  DialogueSession next = session;
  next.turns.push_back({next.pending.front(), "", utc_now_iso8601(), true});
  next.pending.erase(next.pending.begin());
  return next;
}

DialogueSession add_followup(const DialogueSession& session, std::string_view prompt) {
  require_open(session);
  if (is_blank(prompt)) throw PreconditionError("follow-up prompt is empty");
  DialogueSession next = session;
  next.pending.emplace_back(prompt);
  return next;
}

std::string extraction_prompt(const DialogueSession& session) {
  std::ostringstream out;
  out << "You are helping a teacher describe a virtual lab simulation titled \"" << session.title
      << "\".\n"
      << "Read the conversation below and identify:\n"
      << "- the teacher's instructional goals, summarized in a few sentences;\n"
      << "- the knowledge units: concepts, variables or skills the teacher wants to emphasize. "
         "Give each a short name, a brief description, and a kind: input (students change it), "
         "output (the simulation computes it), constant (fixed during the activity) or "
         "observable (students watch or measure it);\n"
      << "- the relationships: labeled links among two or more knowledge units that express a "
         "grouping, dependency or causal effect. Set directed to true when the members are "
         "listed from cause to effect.\n"
      << "Give every element the number of the turn it comes from in source_turn.\n"
      << "\nConversation:\n";
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    const auto& t = session.turns[i];
    out << "Turn " << i << "\n"
        << "Prompt: " << t.prompt << "\n"
        << "Answer: " << (t.skipped ? "" : t.answer) << "\n";
  }
  out << "\nRepresentation schema: respond with exactly one JSON object and no other text.\n"
      << R"({"instruction_goals": "<string>", "knowledge_units": [{"id": "<string>", )"
      << R"("name": "<string>", "description": "<string>", )"
      << R"("kind": "input|output|constant|observable", "source_turn": <integer>}], )"
      << R"("relationships": [{"id": "<string>", "label": "<string>", "description": "<string>", )"
      << R"("members": ["<knowledge unit id>", ...], "directed": <true|false>, )"
      << R"("source_turn": <integer>}]})"
      << "\n";
  return out.str();
}

std::optional<DraftRepresentation> draft_from_proposal(const DialogueSession& session,
                                                       const json& proposal) {
  if (!proposal.is_object()) return std::nullopt;
  const auto answered = answered_turns(session);
  if (answered.empty()) return std::nullopt;

  DraftRepresentation draft;
  auto& s = draft.base;
  s.sim_id = session.sim_ref;
  s.title = session.title;

  if (auto it = proposal.find("instruction_goals"); it != proposal.end() && it->is_string() &&
                                                    !is_blank(it->get<std::string>())) {
    s.instruction_goals = trim(it->get<std::string>());
  } else {
    for (auto i : answered) {
      if (!s.instruction_goals.empty()) s.instruction_goals += "\n";
      s.instruction_goals += session.turns[i].answer;
    }
  }

  auto source_turn = [&](const json& element, const std::string& id,
                         std::string_view name) -> std::size_t {
    if (auto it = element.find("source_turn"); it != element.end() && it->is_number_integer()) {
      const auto t = it->get<long long>();
      if (t >= 0 && std::find(answered.begin(), answered.end(), static_cast<std::size_t>(t)) !=
                        answered.end()) {
        return static_cast<std::size_t>(t);
      }
    }
    const auto needle = lower(name);
    for (auto i : answered) {
      if (!needle.empty() && lower(session.turns[i].answer).find(needle) != std::string::npos) {
        draft.confidence_notes.push_back(id + ": source turn inferred from answer text");
        return i;
      }
    }
    draft.confidence_notes.push_back(id + ": source turn unknown, attributed to turn " +
                                     std::to_string(answered.front()));
    return answered.front();
  };

  // proposal id or name (lowercased) -> system id
  std::map<std::string, std::string> alias;
  const auto kus = proposal.find("knowledge_units");
  if (kus == proposal.end() || !kus->is_array()) return std::nullopt;
  for (const auto& k : *kus) {
    if (!k.is_object()) return std::nullopt;
    auto name = k.find("name");
    if (name == k.end() || !name->is_string() || is_blank(name->get<std::string>())) {
      return std::nullopt;
    }
    KnowledgeUnit ku;
    ku.id = "ku-" + std::to_string(s.knowledge_units.size() + 1);
    ku.name = trim(name->get<std::string>());
    if (auto d = k.find("description"); d != k.end() && d->is_string()) ku.description = *d;
    ku.kind = KuKind::observable;
    auto kind = k.find("kind");
    std::optional<KuKind> parsed_kind;
    if (kind != k.end() && kind->is_string()) parsed_kind = parse_ku_kind(lower(trim(kind->get<std::string>())));
    if (parsed_kind) {
      ku.kind = *parsed_kind;
    } else {
      draft.confidence_notes.push_back(ku.id + ": kind missing or unknown, set to observable");
    }
    if (auto pid = k.find("id"); pid != k.end() && pid->is_string()) alias[*pid] = ku.id;
    alias.emplace(lower(ku.name), ku.id);
    draft.provenance[ku.id] = source_turn(k, ku.id, ku.name);
    s.knowledge_units.push_back(std::move(ku));
  }

  if (auto rels = proposal.find("relationships"); rels != proposal.end()) {
    if (!rels->is_array()) return std::nullopt;
    for (const auto& r : *rels) {
      if (!r.is_object()) return std::nullopt;
      Relationship rel;
      rel.id = "rel-" + std::to_string(s.relationships.size() + 1);
      auto members = r.find("members");
      if (members == r.end() || !members->is_array()) return std::nullopt;
      for (const auto& m : *members) {
        if (!m.is_string()) continue;
        const std::string key = m.get<std::string>();
        auto it = alias.find(key);
        if (it == alias.end()) it = alias.find(lower(trim(key)));
        if (it == alias.end()) {
          draft.confidence_notes.push_back(rel.id + ": dropped unknown member '" + key + "'");
          continue;
        }
        if (std::find(rel.members.begin(), rel.members.end(), it->second) == rel.members.end()) {
          rel.members.push_back(it->second);
        }
      }
      if (rel.members.size() < 2) {
        draft.confidence_notes.push_back("dropped a relationship with fewer than two known members");
        continue;
      }
      if (auto l = r.find("label"); l != r.end() && l->is_string() && !is_blank(l->get<std::string>())) {
        rel.label = trim(l->get<std::string>());
      } else {
        rel.label = s.find_ku(rel.members[0])->name + " - " + s.find_ku(rel.members[1])->name;
      }
      if (auto d = r.find("description"); d != r.end() && d->is_string()) rel.description = *d;
      if (auto d = r.find("directed"); d != r.end() && d->is_boolean()) rel.directed = *d;
      draft.provenance[rel.id] = source_turn(r, rel.id, rel.label);
      s.relationships.push_back(std::move(rel));
    }
  }

  if (!validate_representation(s).empty()) return std::nullopt;
  return draft;
}

Extraction extract_structure(const DialogueSession& session, Gateway& gateway,
                             const ModelConfig& model) {
  if (session.status != SessionStatus::open && session.status != SessionStatus::review) {
    throw InvalidState("session " + session.session_id + " is " +
                       std::string(to_string(session.status)));
  }
  if (answered_turns(session).empty()) {
    throw PreconditionError("session has no answered turn to extract from");
  }
  DialogueSession working = session;
  working.status = SessionStatus::extracting;

  const std::string prompt = extraction_prompt(session);
  for (int attempt = 1; attempt <= 2; ++attempt) {
    const RawGeneration gen = gateway.complete(prompt, model, CallMode::benchmark);
    if (gen.transport_status != TransportStatus::ok) {
      throw GatewayError("extraction call failed: " + std::string(to_string(gen.transport_status)) +
                         (gen.error_detail.empty() ? "" : " (" + gen.error_detail + ")"));
    }
    auto extracted = extract_json(gen.raw_text);
    if (!extracted) continue;
    auto draft = draft_from_proposal(session, extracted.value());
    if (!draft) continue;
    working.status = SessionStatus::review;
    return {std::move(working), std::move(*draft), attempt};
  }
  throw ExtractionUnparsable("model output could not be mapped to a representation after one retry");
}

TeacherEdit edit_from_json(const json& j) {
  if (!j.is_object() || !j.contains("op")) throw FormatError("edit needs an 'op'");
  try {
    const auto op = j["op"].get<std::string>();
    if (op == "add_ku") {
      return AddKnowledgeUnit{opt<std::string>(j, "id"), j.at("name").get<std::string>(),
                              j.value("description", ""),
                              kind_from(j, "kind", KuKind::observable)};
    }
    if (op == "update_ku") {
      UpdateKnowledgeUnit e{j.at("id").get<std::string>(), opt<std::string>(j, "name"),
                            opt<std::string>(j, "description"), std::nullopt};
      if (j.contains("kind")) e.kind = kind_from(j, "kind", KuKind::observable);
      return e;
    }
    if (op == "delete_ku") {
      return DeleteKnowledgeUnit{j.at("id").get<std::string>(), j.value("cascade", false)};
    }
    if (op == "add_relationship") {
      return AddRelationship{opt<std::string>(j, "id"), j.value("label", ""),
                             j.value("description", ""),
                             j.at("members").get<std::vector<std::string>>(),
                             j.value("directed", false)};
    }
    if (op == "update_relationship") {
      return UpdateRelationship{j.at("id").get<std::string>(), opt<std::string>(j, "label"),
                                opt<std::string>(j, "description"),
                                opt<std::vector<std::string>>(j, "members"),
                                opt<bool>(j, "directed")};
    }
    if (op == "delete_relationship") return DeleteRelationship{j.at("id").get<std::string>()};
    if (op == "set_goals") return SetGoals{j.at("text").get<std::string>()};
    throw FormatError("unknown edit op '" + op + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("edit: ") + e.what());
  }
}

json to_json(const TeacherEdit& edit) {
  json j = json::object();
  std::visit(
      [&j](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AddKnowledgeUnit>) {
          j["op"] = "add_ku";
          if (e.id) j["id"] = *e.id;
          j["name"] = e.name;
          j["description"] = e.description;
          j["kind"] = std::string(to_string(e.kind));
        } else if constexpr (std::is_same_v<T, UpdateKnowledgeUnit>) {
          j["op"] = "update_ku";
          j["id"] = e.id;
          if (e.name) j["name"] = *e.name;
          if (e.description) j["description"] = *e.description;
          if (e.kind) j["kind"] = std::string(to_string(*e.kind));
        } else if constexpr (std::is_same_v<T, DeleteKnowledgeUnit>) {
          j["op"] = "delete_ku";
          j["id"] = e.id;
          j["cascade"] = e.cascade;
        } else if constexpr (std::is_same_v<T, AddRelationship>) {
          j["op"] = "add_relationship";
          if (e.id) j["id"] = *e.id;
          j["label"] = e.label;
          j["description"] = e.description;
          j["members"] = e.members;
          j["directed"] = e.directed;
        } else if constexpr (std::is_same_v<T, UpdateRelationship>) {
          j["op"] = "update_relationship";
          j["id"] = e.id;
          if (e.label) j["label"] = *e.label;
          if (e.description) j["description"] = *e.description;
          if (e.members) j["members"] = *e.members;
          if (e.directed) j["directed"] = *e.directed;
        } else if constexpr (std::is_same_v<T, DeleteRelationship>) {
          j["op"] = "delete_relationship";
          j["id"] = e.id;
        } else {
          j["op"] = "set_goals";
          j["text"] = e.text;
        }
      },
      edit);
  return j;
}

CommittedRepresentation apply_teacher_edits(const DialogueSession& session,
                                            const DraftRepresentation& draft,
                                            std::span<const TeacherEdit> edits) {
  if (session.status == SessionStatus::committed) {
    throw SessionClosed("session " + session.session_id + " is already committed");
  }
  if (session.status != SessionStatus::review) {
    throw InvalidState("session " + session.session_id + " has no extracted draft to commit");
  }
  if (auto report = validate_representation(draft.base); !report.empty()) {
    throw ValidationFailed(InvalidRepresentation(std::move(report)).what());
  }

  SimulationRepresentation s = draft.base;
  std::map<std::string, Origin> provenance;
  for (const auto& [id, turn] : draft.provenance) provenance[id] = {Origin::Source::turn, turn};

  auto find_ku = [&s](const std::string& id) {
    auto it = std::find_if(s.knowledge_units.begin(), s.knowledge_units.end(),
                           [&id](const KnowledgeUnit& k) { return k.id == id; });
    if (it == s.knowledge_units.end()) throw ValidationFailed("unknown knowledge unit '" + id + "'");
    return it;
  };
  auto find_rel = [&s](const std::string& id) {
    auto it = std::find_if(s.relationships.begin(), s.relationships.end(),
                           [&id](const Relationship& r) { return r.id == id; });
    if (it == s.relationships.end()) throw ValidationFailed("unknown relationship '" + id + "'");
    return it;
  };
  auto claim_id = [&s](const std::optional<std::string>& wanted, std::string_view prefix) {
    const auto taken = all_ids(s);
    if (wanted) {
      if (is_blank(*wanted) || taken.contains(*wanted)) {
        throw ValidationFailed("id '" + *wanted + "' is empty or already in use");
      }
      return *wanted;
    }
    return next_id(prefix, taken);
  };

  for (std::size_t index = 0; index < edits.size(); ++index) {
    const Origin created{Origin::Source::edit, index};
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, AddKnowledgeUnit>) {
            KnowledgeUnit ku{claim_id(e.id, "ku"), e.name, e.description, e.kind, json::object()};
            provenance[ku.id] = created;
            s.knowledge_units.push_back(std::move(ku));
          } else if constexpr (std::is_same_v<T, UpdateKnowledgeUnit>) {
            auto it = find_ku(e.id);
            if (e.name) it->name = *e.name;
            if (e.description) it->description = *e.description;
            if (e.kind) it->kind = *e.kind;
          } else if constexpr (std::is_same_v<T, DeleteKnowledgeUnit>) {
            auto it = find_ku(e.id);
            std::vector<std::string> referencing;
            for (const auto& rel : s.relationships) {
              if (std::find(rel.members.begin(), rel.members.end(), e.id) != rel.members.end()) {
                referencing.push_back(rel.id);
              }
            }
            if (!referencing.empty() && !e.cascade) {
              std::string list;
              for (const auto& r : referencing) list += (list.empty() ? "" : ", ") + r;
              throw EditConflict("knowledge unit '" + e.id + "' is referenced by " + list +
                                 "; delete with cascade or edit those relationships first");
            }
            s.knowledge_units.erase(it);
            provenance.erase(e.id);
            for (auto& rel : s.relationships) {
              std::erase(rel.members, e.id);
            }
            std::erase_if(s.relationships, [&provenance](const Relationship& r) {
              if (r.members.size() >= 2) return false;
              provenance.erase(r.id);
              return true;
            });
          } else if constexpr (std::is_same_v<T, AddRelationship>) {
            Relationship rel{claim_id(e.id, "rel"), e.label, e.description, e.members, e.directed,
                             json::object()};
            provenance[rel.id] = created;
            s.relationships.push_back(std::move(rel));
          } else if constexpr (std::is_same_v<T, UpdateRelationship>) {
            auto it = find_rel(e.id);
            if (e.label) it->label = *e.label;
            if (e.description) it->description = *e.description;
            if (e.members) it->members = *e.members;
            if (e.directed) it->directed = *e.directed;
          } else if constexpr (std::is_same_v<T, DeleteRelationship>) {
            auto it = find_rel(e.id);
            provenance.erase(it->id);
            s.relationships.erase(it);
          } else {
            s.instruction_goals = e.text;
          }
        },
        edits[index]);
  }

  if (auto report = validate_representation(s); !report.empty()) {
    throw ValidationFailed(InvalidRepresentation(std::move(report)).what());
  }

  CommittedRepresentation out;
  out.representation = std::move(s);
  out.provenance = std::move(provenance);
  out.session = session;
  out.session.status = SessionStatus::committed;
  return out;
}

json to_json(const DialogueSession& s) {
  json j = json::object();
  j["session_id"] = s.session_id;
  j["sim_ref"] = s.sim_ref;
  j["title"] = s.title;
  j["turns"] = json::array();
  for (const auto& t : s.turns) {
    json turn = json::object();
    turn["prompt"] = t.prompt;
    turn["answer"] = t.answer;
    turn["timestamp"] = t.timestamp;
    turn["skipped"] = t.skipped;
    j["turns"].push_back(std::move(turn));
  }
  j["pending"] = s.pending;
  j["status"] = std::string(to_string(s.status));
  return j;
}

DialogueSession session_from_json(const json& j) {
  try {
    DialogueSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.sim_ref = j.at("sim_ref").get<std::string>();
    s.title = j.value("title", "");
    for (const auto& t : j.at("turns")) {
      s.turns.push_back({t.at("prompt").get<std::string>(), t.at("answer").get<std::string>(),
                         t.value("timestamp", ""), t.value("skipped", false)});
    }
    s.pending = j.value("pending", std::vector<std::string>{});
    const auto status = j.at("status").get<std::string>();
    bool found = false;
    for (int i = 0; i < 4; ++i) {
      if (kStatusNames[i] == status) {
        s.status = static_cast<SessionStatus>(i);
        found = true;
      }
    }
    if (!found) throw FormatError("unknown session status '" + status + "'");
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("session: ") + e.what());
  }
}

json to_json(const DraftRepresentation& d) {
  json j = json::object();
  j["representation"] = to_json(d.base);
  json prov = json::object();
  for (const auto& [id, turn] : d.provenance) prov[id] = turn;
  j["provenance"] = std::move(prov);
  j["confidence_notes"] = d.confidence_notes;
  return j;
}

DraftRepresentation draft_from_json(const json& j) {
  try {
    DraftRepresentation d;
    d.base = representation_from_json(j.at("representation"), ParseMode::lenient);
    for (auto it = j.at("provenance").begin(); it != j.at("provenance").end(); ++it) {
      d.provenance[it.key()] = it.value().get<std::size_t>();
    }
    d.confidence_notes = j.value("confidence_notes", std::vector<std::string>{});
    return d;
  } catch (const json::exception& e) {
    throw FormatError(std::string("draft: ") + e.what());
  }
}

json provenance_to_json(const std::map<std::string, Origin>& provenance) {
  json j = json::object();
  for (const auto& [id, origin] : provenance) {
    json o = json::object();
    o["source"] = origin.source == Origin::Source::turn ? "turn" : "edit";
    o["index"] = origin.index;
    j[id] = std::move(o);
  }
  return j;
}

}  // namespace labqg
