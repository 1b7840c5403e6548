#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "labqg/common.hpp"

namespace labqg {

enum class KuKind { input, output, constant, observable };

std::string_view to_string(KuKind kind);
std::optional<KuKind> parse_ku_kind(std::string_view name);

struct KnowledgeUnit {
  std::string id;
  std::string name;
  std::string description;
  KuKind kind = KuKind::input;
  json extra = json::object();  // unknown keys kept by lenient parsing

  bool operator==(const KnowledgeUnit&) const = default;
};

struct Relationship {
  std::string id;
  std::string label;
  std::string description;
  std::vector<std::string> members;
  bool directed = false;
  json extra = json::object();

  bool operator==(const Relationship&) const = default;
};

/// A lab described as instruction goals, knowledge units and the
/// relationships among them. Plain value type; nothing mutates it after
/// construction.
struct SimulationRepresentation {
  std::string sim_id;
  std::string title;
  std::string instruction_goals;
  std::vector<KnowledgeUnit> knowledge_units;
  std::vector<Relationship> relationships;
  json extra = json::object();

  const KnowledgeUnit* find_ku(std::string_view id) const;
  const Relationship* find_relationship(std::string_view id) const;

  bool operator==(const SimulationRepresentation&) const = default;
};

struct Violation {
  std::string code;
  std::string message;
  std::string element_id;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

namespace violation {
inline constexpr std::string_view kEmptyKuSet = "EMPTY_KU_SET";
inline constexpr std::string_view kDanglingMember = "DANGLING_MEMBER";
inline constexpr std::string_view kDuplicateKuId = "DUPLICATE_KU_ID";
inline constexpr std::string_view kDuplicateRelationshipId = "DUPLICATE_RELATIONSHIP_ID";
inline constexpr std::string_view kEmptyId = "EMPTY_ID";
inline constexpr std::string_view kEmptyKuName = "EMPTY_KU_NAME";
inline constexpr std::string_view kTooFewMembers = "TOO_FEW_MEMBERS";
inline constexpr std::string_view kDuplicateMember = "DUPLICATE_MEMBER";
}  // namespace violation

ValidationReport validate_representation(const SimulationRepresentation& s);

class InvalidRepresentation : public Error {
 public:
  explicit InvalidRepresentation(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Throws InvalidRepresentation when the report is non-empty.
void require_valid(const SimulationRepresentation& s);

/// Outgoing edges per knowledge-unit id. Every KU appears as a key, isolated
/// ones with an empty set.
using KuGraph = std::map<std::string, std::set<std::string>>;

KuGraph ku_graph(const SimulationRepresentation& s);

/// All simple paths with exactly `nodes` vertices, sorted lexicographically.
/// A path whose reverse is also a path is reported once, in its smaller
/// orientation.
std::vector<std::vector<std::string>> simple_paths(const KuGraph& graph, std::size_t nodes);

/// Deterministic pick among `simple_paths(ku_graph(s), min_nodes)`:
/// index = seed mod count. Throws NoChain if there is none.
std::vector<std::string> find_chain(const SimulationRepresentation& s, std::size_t min_nodes,
                                    std::uint64_t seed);

enum class ParseMode { strict, lenient };

json to_json(const KnowledgeUnit& ku);
json to_json(const Relationship& rel);
json to_json(const SimulationRepresentation& s);

/// Throws FormatError on shape problems (and on unknown keys in strict mode).
/// Referential integrity is not checked here; see validate_representation.
SimulationRepresentation representation_from_json(const json& j, ParseMode mode);

json to_json(const Violation& v);
json to_json(const ValidationReport& report);

}  // namespace labqg
