#include "labqg/taxonomy.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace labqg {

namespace {

constexpr std::string_view kTypeNames[] = {
    "conceptual",   "cause_and_effect", "critical_thinking", "relationship",
    "causal_chain", "calculation",      "justification",
};
constexpr std::string_view kTypeDisplay[] = {
    "conceptual",   "cause-and-effect", "critical thinking", "relationship",
    "causal chain", "calculation",      "justification",
};
constexpr std::string_view kFormatNames[] = {
    "multiple_choice", "multiple_select", "true_false", "fill_in_the_blank", "free_response_essay",
};
constexpr std::string_view kFormatDisplay[] = {
    "multiple choice", "multiple select", "true/false", "fill-in-the-blank", "free-response essay",
};

struct PairCandidate {
  const Relationship* rel;
  std::string cause;
  std::string effect;
};

std::vector<const KnowledgeUnit*> kus_by_id(const SimulationRepresentation& s) {
  std::vector<const KnowledgeUnit*> out;
  for (const auto& ku : s.knowledge_units) out.push_back(&ku);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return out;
}

std::vector<const Relationship*> rels_by_id(const SimulationRepresentation& s) {
  std::vector<const Relationship*> out;
  for (const auto& rel : s.relationships) out.push_back(&rel);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return out;
}

// Directed relationships contribute their consecutive member pairs; undirected
// ones every unordered pair, in member order.
std::vector<PairCandidate> pair_candidates(const SimulationRepresentation& s) {
  std::vector<PairCandidate> out;
  for (const auto* rel : rels_by_id(s)) {
    const auto& m = rel->members;
    if (rel->directed) {
      for (std::size_t i = 0; i + 1 < m.size(); ++i) out.push_back({rel, m[i], m[i + 1]});
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) out.push_back({rel, m[i], m[j]});
      }
    }
  }
  return out;
}

bool supports_edge(const Relationship& rel, const std::string& a, const std::string& b) {
  const auto& m = rel.members;
  if (rel.directed) {
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
      if (m[i] == a && m[i + 1] == b) return true;
    }
    return false;
  }
  const bool has_a = std::find(m.begin(), m.end(), a) != m.end();
  const bool has_b = std::find(m.begin(), m.end(), b) != m.end();
  return a != b && has_a && has_b;
}

bool contains_all(const Relationship& rel, const std::vector<std::string>& ids) {
  return std::all_of(ids.begin(), ids.end(), [&rel](const std::string& id) {
    return std::find(rel.members.begin(), rel.members.end(), id) != rel.members.end();
  });
}

std::vector<KnowledgeUnit> lookup(const SimulationRepresentation& s,
                                  const std::vector<std::string>& ids) {
  std::vector<KnowledgeUnit> out;
  for (const auto& id : ids) out.push_back(*s.find_ku(id));
  return out;
}

ContextSlice base_slice(const SimulationRepresentation& s, QuestionType qtype) {
  ContextSlice slice;
  slice.sim_ref = s.sim_id;
  slice.qtype = qtype;
  slice.goals_excerpt = s.instruction_goals;
  return slice;
}

ContextSlice chain_slice(const SimulationRepresentation& s, std::uint64_t seed) {
  ContextSlice slice = base_slice(s, QuestionType::causal_chain);
  const auto rels = rels_by_id(s);

  std::vector<std::vector<std::string>> cross;
  for (auto& path : simple_paths(ku_graph(s), 3)) {
    const bool within_one = std::any_of(rels.begin(), rels.end(),
                                        [&path](auto* r) { return contains_all(*r, path); });
    if (!within_one) cross.push_back(std::move(path));
  }

  if (!cross.empty()) {
    const auto& path = cross[seed % cross.size()];
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      for (const auto* rel : rels) {
        if (!supports_edge(*rel, path[i], path[i + 1])) continue;
        const bool already = std::any_of(slice.rels.begin(), slice.rels.end(),
                                         [rel](const Relationship& r) { return r.id == rel->id; });
        if (!already) slice.rels.push_back(*rel);
        break;
      }
    }
    slice.kus = lookup(s, path);
    slice.chain_order = path;
    return slice;
  }

  std::vector<const Relationship*> long_rels;
  for (const auto* rel : rels) {
    if (rel->members.size() >= 3) long_rels.push_back(rel);
  }
  if (long_rels.empty()) {
    throw TypeUnsupported("no causal chain of three knowledge units in '" + s.sim_id + "'");
  }
  const auto* rel = long_rels[seed % long_rels.size()];
  slice.rels.push_back(*rel);
  slice.kus = lookup(s, rel->members);
  slice.chain_order = rel->members;
  return slice;
}

std::vector<std::string> ids_of(const std::vector<KnowledgeUnit>& kus) {
  std::vector<std::string> out;
  for (const auto& ku : kus) out.push_back(ku.id);
  return out;
}

}  // namespace

std::string_view to_string(QuestionType t) { return kTypeNames[static_cast<int>(t)]; }
std::string_view to_string(QuestionFormat f) { return kFormatNames[static_cast<int>(f)]; }
std::string_view display_name(QuestionType t) { return kTypeDisplay[static_cast<int>(t)]; }
std::string_view display_name(QuestionFormat f) { return kFormatDisplay[static_cast<int>(f)]; }

std::optional<QuestionType> parse_question_type(std::string_view name) {
  for (auto t : kAllQuestionTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<QuestionFormat> parse_question_format(std::string_view name) {
  for (auto f : kAllQuestionFormats) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

std::set<QuestionType> supported_types(const SimulationRepresentation& s) {
  require_valid(s);
  std::set<QuestionType> out;
  const bool has_ku = !s.knowledge_units.empty();
  const bool has_rel = !s.relationships.empty();
  if (has_ku) out.insert(QuestionType::conceptual);
  if (has_ku && !is_blank(s.instruction_goals)) out.insert(QuestionType::critical_thinking);
  if (has_rel) {
    out.insert(QuestionType::cause_and_effect);
    out.insert(QuestionType::relationship);
    out.insert(QuestionType::calculation);
    out.insert(QuestionType::justification);
  }
  if (!simple_paths(ku_graph(s), 3).empty()) out.insert(QuestionType::causal_chain);
  return out;
}

ContextSlice context_for(const SimulationRepresentation& s, QuestionType qtype,
                         std::uint64_t seed) {
  if (!supported_types(s).contains(qtype)) {
    throw TypeUnsupported("question type '" + std::string(to_string(qtype)) +
                          "' is not supported by '" + s.sim_id + "'");
  }
  ContextSlice slice = base_slice(s, qtype);
  switch (qtype) {
    case QuestionType::conceptual: {
      const auto kus = kus_by_id(s);
      slice.kus.push_back(*kus[seed % kus.size()]);
      break;
    }
    case QuestionType::cause_and_effect: {
      const auto pairs = pair_candidates(s);
      const auto& pick = pairs[seed % pairs.size()];
      slice.kus = lookup(s, {pick.cause, pick.effect});
      slice.rels.push_back(*pick.rel);
      break;
    }
    case QuestionType::critical_thinking: {
      const auto pairs = pair_candidates(s);
      if (!pairs.empty()) {
        const auto& pick = pairs[seed % pairs.size()];
        slice.kus = lookup(s, {pick.cause, pick.effect});
        slice.rels.push_back(*pick.rel);
      } else {
        const auto kus = kus_by_id(s);
        slice.kus.push_back(*kus[seed % kus.size()]);
      }
      break;
    }
    case QuestionType::relationship:
    case QuestionType::calculation:
    case QuestionType::justification: {
      const auto rels = rels_by_id(s);
      const auto* rel = rels[seed % rels.size()];
      slice.rels.push_back(*rel);
      slice.kus = lookup(s, rel->members);
      break;
    }
    case QuestionType::causal_chain:
      return chain_slice(s, seed);
  }
  return slice;
}

std::optional<std::string> check_slice(const ContextSlice& slice) {
  const auto nk = slice.kus.size();
  const auto nr = slice.rels.size();
  const bool non_chain = slice.qtype != QuestionType::causal_chain;
  if (non_chain && slice.chain_order) return "chain_order present on a non-chain slice";

  switch (slice.qtype) {
    case QuestionType::conceptual:
      if (nk != 1 || nr != 0) return "conceptual slice needs exactly one KU and no relationships";
      break;
    case QuestionType::cause_and_effect:
      if (nk != 2 || nr != 1) return "cause_and_effect slice needs two KUs and one relationship";
      if (!contains_all(slice.rels[0], ids_of(slice.kus))) {
        return "cause_and_effect relationship does not contain both KUs";
      }
      break;
    case QuestionType::relationship:
    case QuestionType::calculation:
    case QuestionType::justification:
      if (nr != 1) return "slice needs exactly one relationship";
      if (ids_of(slice.kus) != slice.rels[0].members) {
        return "slice KUs must be exactly the relationship members";
      }
      break;
    case QuestionType::critical_thinking:
      if (nk < 1 || nk > 2 || nr > 1) return "critical_thinking slice needs 1-2 KUs, <=1 relationship";
      if (is_blank(slice.goals_excerpt)) return "critical_thinking slice needs goals";
      break;
    case QuestionType::causal_chain: {
      if (!slice.chain_order || slice.chain_order->size() < 3) return "chain_order shorter than 3";
      const auto& chain = *slice.chain_order;
      std::set<std::string> unique(chain.begin(), chain.end());
      if (unique.size() != chain.size()) return "chain_order repeats a KU";
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const bool linked =
            std::any_of(slice.rels.begin(), slice.rels.end(), [&](const Relationship& r) {
              return supports_edge(r, chain[i], chain[i + 1]);
            });
        if (!linked) return "chain step " + chain[i] + " -> " + chain[i + 1] + " is not linked";
      }
      if (ids_of(slice.kus) != chain) return "chain KUs must follow chain_order";
      break;
    }
  }
  return std::nullopt;
}

std::set<std::string> slice_element_ids(const ContextSlice& slice) {
  std::set<std::string> ids{"goals"};
  for (const auto& ku : slice.kus) ids.insert(ku.id);
  for (const auto& rel : slice.rels) ids.insert(rel.id);
  return ids;
}

json to_json(const ContextSlice& slice) {
  json j = json::object();
  j["sim_ref"] = slice.sim_ref;
  j["qtype"] = std::string(to_string(slice.qtype));
  j["goals_excerpt"] = slice.goals_excerpt;
  j["knowledge_units"] = json::array();
  for (const auto& ku : slice.kus) j["knowledge_units"].push_back(to_json(ku));
  j["relationships"] = json::array();
  for (const auto& rel : slice.rels) j["relationships"].push_back(to_json(rel));
  if (slice.chain_order) j["chain_order"] = *slice.chain_order;
  return j;
}

ContextSlice slice_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("context slice must be an object");
  try {
    ContextSlice slice;
    slice.sim_ref = j.at("sim_ref").get<std::string>();
    const auto qtype = parse_question_type(j.at("qtype").get<std::string>());
    if (!qtype) throw FormatError("context slice: unknown qtype");
    slice.qtype = *qtype;
    slice.goals_excerpt = j.at("goals_excerpt").get<std::string>();
    // Reuse the representation reader for element parsing.
    json wrapper = json::object();
    wrapper["sim_id"] = slice.sim_ref;
    wrapper["title"] = "";
    wrapper["instruction_goals"] = "";
    wrapper["knowledge_units"] = j.at("knowledge_units");
    wrapper["relationships"] = j.at("relationships");
    auto s = representation_from_json(wrapper, ParseMode::lenient);
    slice.kus = std::move(s.knowledge_units);
    slice.rels = std::move(s.relationships);
    if (j.contains("chain_order")) {
      slice.chain_order = j.at("chain_order").get<std::vector<std::string>>();
    }
    return slice;
  } catch (const json::exception& e) {
    throw FormatError(std::string("context slice: ") + e.what());
  }
}

}  // namespace labqg
