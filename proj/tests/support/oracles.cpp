#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace labqg::testing {

SimulationRepresentation random_representation(std::mt19937_64& rng, int max_kus, int max_rels) {
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  SimulationRepresentation s;
  s.sim_id = "sim-" + std::to_string(pick(0, 999));
  s.title = "Random lab";
  s.instruction_goals = pick(0, 4) == 0 ? "  " : "Explore the random lab.";

  const int nk = pick(1, max_kus);
  std::vector<std::string> tokens = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
                                     "golf",  "hotel", "india",   "juliet"};
  std::shuffle(tokens.begin(), tokens.end(), rng);
  constexpr KuKind kinds[] = {KuKind::input, KuKind::output, KuKind::constant, KuKind::observable};
  for (int i = 0; i < nk; ++i) {
    s.knowledge_units.push_back({tokens[i], "Unit " + tokens[i], "", kinds[pick(0, 3)], json::object()});
  }
  if (nk >= 2) {
    const int nr = pick(0, max_rels);
    for (int r = 0; r < nr; ++r) {
      std::vector<std::string> ids;
      for (const auto& ku : s.knowledge_units) ids.push_back(ku.id);
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(static_cast<std::size_t>(pick(2, std::min(4, nk))));
      s.relationships.push_back({"r" + std::to_string(pick(0, 99)) + "-" + std::to_string(r),
                                 "link " + std::to_string(r), "", ids, pick(0, 1) == 1,
                                 json::object()});
    }
  }
  return s;
}

bool linked(const SimulationRepresentation& s, const std::string& a, const std::string& b) {
  if (a == b) return false;
  for (const auto& rel : s.relationships) {
    const auto& m = rel.members;
    if (rel.directed) {
      for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        if (m[i] == a && m[i + 1] == b) return true;
      }
    } else if (std::count(m.begin(), m.end(), a) && std::count(m.begin(), m.end(), b)) {
      return true;
    }
  }
  return false;
}

std::vector<std::vector<std::string>> brute_force_paths(const SimulationRepresentation& s,
                                                        std::size_t n) {
  std::vector<std::string> ids;
  for (const auto& ku : s.knowledge_units) ids.push_back(ku.id);
  auto is_path = [&s](const std::vector<std::string>& t) {
    std::set<std::string> distinct(t.begin(), t.end());
    if (distinct.size() != t.size()) return false;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if (!linked(s, t[i], t[i + 1])) return false;
    }
    return true;
  };

  std::vector<std::vector<std::string>> out;
  if (n == 0 || ids.empty()) return out;
  std::vector<std::size_t> odometer(n, 0);
  while (true) {
    std::vector<std::string> tuple;
    for (auto i : odometer) tuple.push_back(ids[i]);
    if (is_path(tuple)) {
      std::vector<std::string> rev(tuple.rbegin(), tuple.rend());
      if (!(is_path(rev) && rev < tuple)) out.push_back(tuple);
    }
    std::size_t d = 0;
    while (d < n && ++odometer[d] == ids.size()) odometer[d++] = 0;
    if (d == n) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<double> brute_force_alpha(const RatingMatrix& ratings, MeasurementLevel level) {
  std::vector<std::vector<int>> units;
  const std::size_t items = ratings.empty() ? 0 : ratings.front().size();
  for (std::size_t u = 0; u < items; ++u) {
    std::vector<int> values;
    for (const auto& rater : ratings) {
      if (rater[u]) values.push_back(*rater[u]);
    }
    if (values.size() >= 2) units.push_back(values);
  }
  if (units.size() < 2) return std::nullopt;

  std::map<int, double> freq;
  double n = 0;
  for (const auto& values : units) {
    for (int v : values) {
      freq[v] += 1;
      n += 1;
    }
  }
  auto delta2 = [&](int c, int k) -> double {
    if (c == k) return 0.0;
    switch (level) {
      case MeasurementLevel::nominal: return 1.0;
      case MeasurementLevel::interval: return static_cast<double>(c - k) * (c - k);
      case MeasurementLevel::ordinal: {
        const int lo = std::min(c, k), hi = std::max(c, k);
        double sum = 0;
        for (const auto& [g, f] : freq) {
          if (g >= lo && g <= hi) sum += f;
        }
        sum -= (freq[c] + freq[k]) / 2.0;
        return sum * sum;
      }
    }
    return 0.0;
  };

  double d_o = 0;
  for (const auto& values : units) {
    double within = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (i != j) within += delta2(values[i], values[j]);
      }
    }
    d_o += within / static_cast<double>(values.size() - 1);
  }
  d_o /= n;

  std::vector<int> all;
  for (const auto& values : units) all.insert(all.end(), values.begin(), values.end());
  double d_e = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (i != j) d_e += delta2(all[i], all[j]);
    }
  }
  d_e /= n * (n - 1);
  if (d_e == 0) return std::nullopt;
  return 1.0 - d_o / d_e;
}

std::optional<std::string> independent_slice_check(const SimulationRepresentation& s,
                                                   const ContextSlice& slice) {
  if (slice.sim_ref != s.sim_id) return "sim_ref differs";
  if (slice.goals_excerpt != s.instruction_goals) return "goals differ";
  for (const auto& ku : slice.kus) {
    const auto* src = s.find_ku(ku.id);
    if (src == nullptr || !(*src == ku)) return "KU " + ku.id + " is not from the source";
  }
  for (const auto& rel : slice.rels) {
    const auto* src = s.find_relationship(rel.id);
    if (src == nullptr || !(*src == rel)) return "relationship " + rel.id + " is not from the source";
  }
  auto member_ids = [](const Relationship& r) { return r.members; };
  std::vector<std::string> ku_ids;
  for (const auto& ku : slice.kus) ku_ids.push_back(ku.id);
  auto rel_has = [](const Relationship& r, const std::string& id) {
    return std::count(r.members.begin(), r.members.end(), id) > 0;
  };
  const bool chain = slice.qtype == QuestionType::causal_chain;
  if (!chain && slice.chain_order) return "chain_order on a non-chain slice";

  switch (slice.qtype) {
    case QuestionType::conceptual:
      if (slice.kus.size() != 1 || !slice.rels.empty()) return "conceptual shape";
      break;
    case QuestionType::cause_and_effect:
      if (slice.kus.size() != 2 || slice.rels.size() != 1) return "cause_and_effect shape";
      if (!rel_has(slice.rels[0], ku_ids[0]) || !rel_has(slice.rels[0], ku_ids[1])) {
        return "cause_and_effect relationship misses a KU";
      }
      if (slice.rels[0].directed) {
        const auto& m = slice.rels[0].members;
        bool consecutive = false;
        for (std::size_t i = 0; i + 1 < m.size(); ++i) {
          consecutive |= m[i] == ku_ids[0] && m[i + 1] == ku_ids[1];
        }
        if (!consecutive) return "directed cause_and_effect pair is not a step";
      }
      break;
    case QuestionType::critical_thinking:
      if (slice.kus.empty() || slice.kus.size() > 2 || slice.rels.size() > 1) {
        return "critical_thinking shape";
      }
      if (slice.goals_excerpt.find_first_not_of(" \t\r\n") == std::string::npos) {
        return "critical_thinking without goals";
      }
      if (slice.kus.size() == 2 &&
          (slice.rels.size() != 1 || !rel_has(slice.rels[0], ku_ids[0]) ||
           !rel_has(slice.rels[0], ku_ids[1]))) {
        return "critical_thinking pair without its relationship";
      }
      break;
    case QuestionType::relationship:
    case QuestionType::calculation:
    case QuestionType::justification:
      if (slice.rels.size() != 1) return "one relationship expected";
      if (ku_ids != member_ids(slice.rels[0])) return "KUs differ from members";
      break;
    case QuestionType::causal_chain: {
      if (!slice.chain_order || slice.chain_order->size() < 3) return "chain too short";
      const auto& order = *slice.chain_order;
      if (ku_ids != order) return "KUs differ from chain order";
      if (std::set<std::string>(order.begin(), order.end()).size() != order.size()) {
        return "chain repeats a KU";
      }
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        SimulationRepresentation only_slice = s;
        only_slice.relationships = slice.rels;
        if (!linked(only_slice, order[i], order[i + 1])) return "chain step not linked in slice";
      }
      break;
    }
  }
  return std::nullopt;
}

}  // namespace labqg::testing
