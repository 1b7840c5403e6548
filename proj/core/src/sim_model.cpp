#include "labqg/sim_model.hpp"

#include <algorithm>
#include <functional>

namespace labqg {

namespace {

constexpr std::string_view kKindNames[] = {"input", "output", "constant", "observable"};

std::string join_codes(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) {
    if (!out.empty()) out += ", ";
    out += v.code;
    if (!v.element_id.empty()) out += "(" + v.element_id + ")";
  }
  return out;
}

const json& require_key(const json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    throw FormatError(std::string(where) + ": missing key '" + std::string(key) + "'");
  }
  return *it;
}

std::string require_string(const json& obj, std::string_view key, std::string_view where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_string()) {
    throw FormatError(std::string(where) + ": '" + std::string(key) + "' must be a string");
  }
  return v.get<std::string>();
}

json collect_extras(const json& obj, std::initializer_list<std::string_view> known, ParseMode mode,
                    std::string_view where) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool is_known =
        std::find(known.begin(), known.end(), std::string_view(it.key())) != known.end();
    if (is_known) continue;
    if (mode == ParseMode::strict) {
      throw FormatError(std::string(where) + ": unknown key '" + it.key() + "'");
    }
    extra[it.key()] = it.value();
  }
  return extra;
}

void append_extras(json& out, const json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) out[it.key()] = it.value();
}

KnowledgeUnit ku_from_json(const json& j, ParseMode mode) {
  if (!j.is_object()) throw FormatError("knowledge unit must be an object");
  KnowledgeUnit ku;
  ku.id = require_string(j, "id", "knowledge unit");
  ku.name = require_string(j, "name", "knowledge unit " + ku.id);
  ku.description = require_string(j, "description", "knowledge unit " + ku.id);
  const auto kind_name = require_string(j, "kind", "knowledge unit " + ku.id);
  const auto kind = parse_ku_kind(kind_name);
  if (!kind) throw FormatError("knowledge unit " + ku.id + ": unknown kind '" + kind_name + "'");
  ku.kind = *kind;
  ku.extra = collect_extras(j, {"id", "name", "description", "kind"}, mode, "knowledge unit " + ku.id);
  return ku;
}

Relationship relationship_from_json(const json& j, ParseMode mode) {
  if (!j.is_object()) throw FormatError("relationship must be an object");
  Relationship rel;
  rel.id = require_string(j, "id", "relationship");
  const std::string where = "relationship " + rel.id;
  rel.label = require_string(j, "label", where);
  rel.description = require_string(j, "description", where);
  const json& members = require_key(j, "members", where);
  if (!members.is_array()) throw FormatError(where + ": 'members' must be an array");
  for (const auto& m : members) {
    if (!m.is_string()) throw FormatError(where + ": member ids must be strings");
    rel.members.push_back(m.get<std::string>());
  }
  const json& directed = require_key(j, "directed", where);
  if (!directed.is_boolean()) throw FormatError(where + ": 'directed' must be a boolean");
  rel.directed = directed.get<bool>();
  rel.extra = collect_extras(j, {"id", "label", "description", "members", "directed"}, mode, where);
  return rel;
}

}  // namespace

std::string_view to_string(KuKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<KuKind> parse_ku_kind(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kKindNames[i] == name) return static_cast<KuKind>(i);
  }
  return std::nullopt;
}

const KnowledgeUnit* SimulationRepresentation::find_ku(std::string_view id) const {
  for (const auto& ku : knowledge_units) {
    if (ku.id == id) return &ku;
  }
  return nullptr;
}

const Relationship* SimulationRepresentation::find_relationship(std::string_view id) const {
  for (const auto& rel : relationships) {
    if (rel.id == id) return &rel;
  }
  return nullptr;
}

ValidationReport validate_representation(const SimulationRepresentation& s) {
  ValidationReport report;
  auto add = [&report](std::string_view code, std::string message, std::string element) {
    report.push_back({std::string(code), std::move(message), std::move(element)});
  };

  if (s.knowledge_units.empty()) {
    add(violation::kEmptyKuSet, "representation has no knowledge units", "");
  }

  std::set<std::string> ku_ids;
  for (const auto& ku : s.knowledge_units) {
    if (ku.id.empty()) add(violation::kEmptyId, "knowledge unit with empty id", "");
    if (!ku_ids.insert(ku.id).second) {
      add(violation::kDuplicateKuId, "knowledge unit id '" + ku.id + "' is not unique", ku.id);
    }
    if (is_blank(ku.name)) {
      add(violation::kEmptyKuName, "knowledge unit '" + ku.id + "' has an empty name", ku.id);
    }
  }

  std::set<std::string> rel_ids;
  for (const auto& rel : s.relationships) {
    if (rel.id.empty()) add(violation::kEmptyId, "relationship with empty id", "");
    if (!rel_ids.insert(rel.id).second) {
      add(violation::kDuplicateRelationshipId, "relationship id '" + rel.id + "' is not unique",
          rel.id);
    }
    if (rel.members.size() < 2) {
      add(violation::kTooFewMembers,
          "relationship '" + rel.id + "' links fewer than two knowledge units", rel.id);
    }
    std::set<std::string> seen;
    for (const auto& m : rel.members) {
      if (!seen.insert(m).second) {
        add(violation::kDuplicateMember,
            "relationship '" + rel.id + "' lists member '" + m + "' more than once", rel.id);
      }
      if (!ku_ids.contains(m)) {
        add(violation::kDanglingMember,
            "relationship '" + rel.id + "' references unknown knowledge unit '" + m + "'", rel.id);
      }
    }
  }
  return report;
}

InvalidRepresentation::InvalidRepresentation(ValidationReport report)
    : Error("InvalidRepresentation", "invalid representation: " + join_codes(report)),
      report_(std::move(report)) {}

void require_valid(const SimulationRepresentation& s) {
  auto report = validate_representation(s);
  if (!report.empty()) throw InvalidRepresentation(std::move(report));
}

KuGraph ku_graph(const SimulationRepresentation& s) {
  require_valid(s);
  KuGraph graph;
  for (const auto& ku : s.knowledge_units) graph[ku.id];
  for (const auto& rel : s.relationships) {
    if (rel.directed) {
      for (std::size_t i = 0; i + 1 < rel.members.size(); ++i) {
        graph[rel.members[i]].insert(rel.members[i + 1]);
      }
    } else {
      for (const auto& a : rel.members) {
        for (const auto& b : rel.members) {
          if (a != b) graph[a].insert(b);
        }
      }
    }
  }
  return graph;
}

std::vector<std::vector<std::string>> simple_paths(const KuGraph& graph, std::size_t nodes) {
  std::vector<std::vector<std::string>> out;
  if (nodes == 0) return out;

  std::vector<std::string> path;
  std::set<std::string> on_path;
  std::function<void(const std::string&)> extend = [&](const std::string& at) {
    path.push_back(at);
    on_path.insert(at);
    if (path.size() == nodes) {
      out.push_back(path);
    } else if (auto it = graph.find(at); it != graph.end()) {
      for (const auto& next : it->second) {
        if (!on_path.contains(next)) extend(next);
      }
    }
    on_path.erase(at);
    path.pop_back();
  };
  for (const auto& [id, _] : graph) extend(id);

  auto is_path = [&graph](const std::vector<std::string>& p) {
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      auto it = graph.find(p[i]);
      if (it == graph.end() || !it->second.contains(p[i + 1])) return false;
    }
    return true;
  };

  std::vector<std::vector<std::string>> canonical;
  for (const auto& p : out) {
    std::vector<std::string> rev(p.rbegin(), p.rend());
    if (rev < p && is_path(rev)) continue;
    canonical.push_back(p);
  }
  std::sort(canonical.begin(), canonical.end());
  return canonical;
}

std::vector<std::string> find_chain(const SimulationRepresentation& s, std::size_t min_nodes,
                                    std::uint64_t seed) {
  if (min_nodes < 3) throw PreconditionError("find_chain requires min_nodes >= 3");
  const auto paths = simple_paths(ku_graph(s), min_nodes);
  if (paths.empty()) {
    throw NoChain("no simple path of " + std::to_string(min_nodes) + " knowledge units in '" +
                  s.sim_id + "'");
  }
  return paths[seed % paths.size()];
}

json to_json(const KnowledgeUnit& ku) {
  json j = json::object();
  j["id"] = ku.id;
  j["name"] = ku.name;
  j["description"] = ku.description;
  j["kind"] = std::string(to_string(ku.kind));
  append_extras(j, ku.extra);
  return j;
}

json to_json(const Relationship& rel) {
  json j = json::object();
  j["id"] = rel.id;
  j["label"] = rel.label;
  j["description"] = rel.description;
  j["members"] = rel.members;
  j["directed"] = rel.directed;
  append_extras(j, rel.extra);
  return j;
}

json to_json(const SimulationRepresentation& s) {
  json j = json::object();
  j["sim_id"] = s.sim_id;
  j["title"] = s.title;
  j["instruction_goals"] = s.instruction_goals;
  j["knowledge_units"] = json::array();
  for (const auto& ku : s.knowledge_units) j["knowledge_units"].push_back(to_json(ku));
  j["relationships"] = json::array();
  for (const auto& rel : s.relationships) j["relationships"].push_back(to_json(rel));
  append_extras(j, s.extra);
  return j;
}

SimulationRepresentation representation_from_json(const json& j, ParseMode mode) {
  if (!j.is_object()) throw FormatError("representation must be a JSON object");
  SimulationRepresentation s;
  s.sim_id = require_string(j, "sim_id", "representation");
  s.title = require_string(j, "title", "representation");
  s.instruction_goals = require_string(j, "instruction_goals", "representation");
  const json& kus = require_key(j, "knowledge_units", "representation");
  if (!kus.is_array()) throw FormatError("representation: 'knowledge_units' must be an array");
  for (const auto& k : kus) s.knowledge_units.push_back(ku_from_json(k, mode));
  const json& rels = require_key(j, "relationships", "representation");
  if (!rels.is_array()) throw FormatError("representation: 'relationships' must be an array");
  for (const auto& r : rels) s.relationships.push_back(relationship_from_json(r, mode));
  s.extra = collect_extras(
      j, {"sim_id", "title", "instruction_goals", "knowledge_units", "relationships"}, mode,
      "representation");
  return s;
}

json to_json(const Violation& v) {
  json j = json::object();
  j["code"] = v.code;
  j["message"] = v.message;
  if (!v.element_id.empty()) j["element_id"] = v.element_id;
  return j;
}

json to_json(const ValidationReport& report) {
  json j = json::array();
  for (const auto& v : report) j.push_back(to_json(v));
  return j;
}

}  // namespace labqg
