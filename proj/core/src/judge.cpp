#include "labqg/judge.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace labqg {

namespace {

constexpr std::string_view kCriterionKeys[] = {
    "fluency",   "correctness",  "clarity",   "specificity", "bias",
    "relevance", "practicality", "alignment", "feasibility", "critical_thinking",
};

constexpr std::string_view kCriterionDisplay[] = {
    "Fluency",   "Correctness",  "Clarity",   "Specificity", "Bias",
    "Relevance", "Practicality", "Alignment", "Feasibility", "Critical Thinking",
};

constexpr std::string_view kCriterionQuestions[] = {
    "Is the question grammatically fluent and natural-sounding?",
    "Is all presented information accurate and factually correct?",
    "Is the question easy to interpret and understand?",
    "Is the question sufficiently precise to elicit a focused response?",
    "Is the question free from leading language or bias?",
    "Is the question directly related to the simulation and learning objectives?",
    "Would this question be useful in a real instructional context?",
    "Does the question align with the established goals or expectations of the lab?",
    "Can the question be answered based on information available in the simulation?",
    "Does the question encourage deeper reasoning or reflection?",
};

constexpr std::string_view kRatingFailureNames[] = {
    "no_json", "malformed_json", "schema_mismatch", "missing_criterion", "score_out_of_range",
};

double delta_squared(MeasurementLevel level, std::size_t c, std::size_t k,
                     const std::vector<int>& values, const std::vector<double>& marginals) {
  if (c == k) return 0.0;
  switch (level) {
    case MeasurementLevel::nominal:
      return 1.0;
    case MeasurementLevel::interval: {
      const double d = values[c] - values[k];
      return d * d;
    }
    case MeasurementLevel::ordinal: {
      const auto lo = std::min(c, k);
      const auto hi = std::max(c, k);
      double sum = 0.0;
      for (std::size_t g = lo; g <= hi; ++g) sum += marginals[g];
      const double d = sum - (marginals[c] + marginals[k]) / 2.0;
      return d * d;
    }
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(Criterion c) { return kCriterionKeys[static_cast<int>(c)]; }
std::string_view display_name(Criterion c) { return kCriterionDisplay[static_cast<int>(c)]; }
std::string_view rubric_question(Criterion c) { return kCriterionQuestions[static_cast<int>(c)]; }
std::string_view to_string(RatingFailure f) { return kRatingFailureNames[static_cast<int>(f)]; }

std::string_view to_string(AlphaError e) {
  return e == AlphaError::degenerate_data ? "degenerate_data" : "insufficient_data";
}

RubricPrompt rubric_prompt(const ParsedQuestion& question, const ContextSlice& slice) {
  RubricPrompt out;
  out.score_schema = json::object();
  for (auto c : kAllCriteria) out.score_schema[std::string(to_string(c))] = "int";

  std::ostringstream text;
  text << "You are an experienced science teacher reviewing a question written for a virtual "
          "lab simulation.\n"
       << "Rate the question on each criterion below using a 5-point scale where 1 = \""
       << kScaleLow << "\" and 5 = \"" << kScaleHigh << "\".\n";

  text << "\nQuestion format: " << display_name(question.format) << "\n"
       << "Question type: " << display_name(slice.qtype) << "\n"
       << "Question (JSON):\n"
       << to_json(question)["payload"].dump(2) << "\n";

  text << "\nSimulation context:\n"
       << "Instructional goals: " << slice.goals_excerpt << "\n";
  for (const auto& ku : slice.kus) {
    text << "- Knowledge unit [" << ku.id << "] " << ku.name << " (" << to_string(ku.kind) << ")";
    if (!is_blank(ku.description)) text << ": " << ku.description;
    text << "\n";
  }
  for (const auto& rel : slice.rels) {
    text << "- Relationship [" << rel.id << "] " << rel.label;
    if (!is_blank(rel.description)) text << ": " << rel.description;
    text << "\n";
  }

  text << "\nCriteria:\n";
  int n = 1;
  for (auto c : kAllCriteria) {
    text << n++ << ". " << display_name(c) << " (" << to_string(c) << "): " << rubric_question(c)
         << "\n";
  }

  text << "\nRating schema: respond with exactly one JSON object and no other text. Every value "
          "is an integer from 1 to 5.\n"
       << "{";
  bool first = true;
  for (auto c : kAllCriteria) {
    if (!first) text << ", ";
    first = false;
    text << "\"" << to_string(c) << "\": <int>";
  }
  text << "}\n";
  out.text = text.str();
  return out;
}

Parsed<QualityRating, RatingFailure> parse_rating(std::string_view raw_text,
                                                  std::string_view judge_id,
                                                  std::string_view question_ref) {
  auto extracted = extract_json(raw_text);
  if (!extracted) {
    return extracted.failure() == FailureCode::no_json ? RatingFailure::no_json
                                                       : RatingFailure::malformed_json;
  }
  const json& obj = extracted.value();
  QualityRating rating;
  rating.judge_id = judge_id;
  rating.question_ref = question_ref;
  for (auto c : kAllCriteria) {
    auto it = obj.find(std::string(to_string(c)));
    if (it == obj.end()) return RatingFailure::missing_criterion;
    if (!it->is_number_integer()) return RatingFailure::schema_mismatch;
    const auto v = it->is_number_unsigned() ? static_cast<long long>(std::min<std::uint64_t>(
                                                  it->get<std::uint64_t>(), 1000))
                                            : it->get<long long>();
    if (v < 1 || v > 5) return RatingFailure::score_out_of_range;
    rating.scores[static_cast<int>(c)] = static_cast<int>(v);
  }
  return rating;
}

Parsed<double, AlphaError> krippendorff_alpha(const RatingMatrix& ratings,
                                              MeasurementLevel level) {
  std::size_t items = 0;
  for (const auto& row : ratings) items = std::max(items, row.size());

  // Distinct values and per-unit value counts over pairable units.
  std::set<int> value_set;
  std::vector<std::map<int, int>> units;
  for (std::size_t u = 0; u < items; ++u) {
    std::map<int, int> counts;
    int m = 0;
    for (const auto& row : ratings) {
      if (u < row.size() && row[u]) {
        ++counts[*row[u]];
        ++m;
      }
    }
    if (m < 2) continue;
    for (const auto& [v, _] : counts) value_set.insert(v);
    units.push_back(std::move(counts));
  }
  if (units.size() < 2) return AlphaError::insufficient_data;

  const std::vector<int> values(value_set.begin(), value_set.end());
  const std::size_t nv = values.size();
  auto index_of = [&values](int v) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) -
                                    values.begin());
  };

  std::vector<std::vector<double>> coincidence(nv, std::vector<double>(nv, 0.0));
  for (const auto& counts : units) {
    int m = 0;
    for (const auto& [_, n] : counts) m += n;
    for (const auto& [vc, nc] : counts) {
      for (const auto& [vk, nk] : counts) {
        const double pairs = vc == vk ? static_cast<double>(nc) * (nc - 1)
                                      : static_cast<double>(nc) * nk;
        coincidence[index_of(vc)][index_of(vk)] += pairs / (m - 1);
      }
    }
  }

  std::vector<double> marginals(nv, 0.0);
  double n_total = 0.0;
  for (std::size_t c = 0; c < nv; ++c) {
    for (std::size_t k = 0; k < nv; ++k) marginals[c] += coincidence[c][k];
    n_total += marginals[c];
  }

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < nv; ++c) {
    for (std::size_t k = 0; k < nv; ++k) {
      const double d2 = delta_squared(level, c, k, values, marginals);
      observed += coincidence[c][k] * d2;
      expected += marginals[c] * marginals[k] * d2;
    }
  }
  if (expected == 0.0) return AlphaError::degenerate_data;
  if (observed == 0.0) return 1.0;
  return 1.0 - (n_total - 1.0) * observed / expected;
}

QualityAggregate aggregate_quality(std::span<const QualityRating> ratings) {
  if (ratings.empty()) throw EmptyInput("no ratings to aggregate");

  std::map<std::string, std::map<std::string, const QualityRating*>> by_question;
  std::set<std::string> judges;
  for (const auto& r : ratings) {
    auto& slot = by_question[r.question_ref][r.judge_id];
    if (slot != nullptr) {
      throw PreconditionError("judge '" + r.judge_id + "' rated question '" + r.question_ref +
                              "' more than once");
    }
    slot = &r;
    judges.insert(r.judge_id);
  }

  QualityAggregate agg;
  agg.n_questions = by_question.size();
  agg.n_judges = judges.size();

  // Exact fractions over a common denominator, divided once.
  std::int64_t denom = 1;
  for (const auto& [_, by_judge] : by_question) {
    denom = std::lcm(denom, static_cast<std::int64_t>(by_judge.size()));
  }
  std::array<std::int64_t, kCriterionCount> numerators{};
  for (const auto& [question, by_judge] : by_question) {
    if (by_judge.size() < agg.n_judges) agg.flagged_questions.push_back(question);
    const auto weight = denom / static_cast<std::int64_t>(by_judge.size());
    for (std::size_t c = 0; c < kCriterionCount; ++c) {
      std::int64_t s = 0;
      for (const auto& [_, r] : by_judge) s += r->scores[c];
      numerators[c] += s * weight;
    }
  }
  const auto n_q = static_cast<std::int64_t>(agg.n_questions);
  std::int64_t composite = 0;
  for (std::size_t c = 0; c < kCriterionCount; ++c) {
    agg.per_criterion_mean[c] =
        static_cast<double>(numerators[c]) / static_cast<double>(denom * n_q);
    composite += numerators[c];
  }
  agg.composite = static_cast<double>(composite) /
                  static_cast<double>(denom * n_q * static_cast<std::int64_t>(kCriterionCount));

  const std::vector<std::string> judge_list(judges.begin(), judges.end());
  RatingMatrix matrix(judge_list.size());
  for (const auto& [question, by_judge] : by_question) {
    for (std::size_t c = 0; c < kCriterionCount; ++c) {
      for (std::size_t j = 0; j < judge_list.size(); ++j) {
        auto it = by_judge.find(judge_list[j]);
        matrix[j].push_back(it == by_judge.end() ? std::nullopt
                                                 : std::optional<int>(it->second->scores[c]));
      }
    }
  }
  auto alpha = krippendorff_alpha(matrix, MeasurementLevel::ordinal);
  if (alpha) {
    agg.alpha = alpha.value();
  } else {
    agg.alpha_error = alpha.failure();
  }
  return agg;
}

json to_json(const QualityRating& r) {
  json j = json::object();
  j["judge_id"] = r.judge_id;
  j["question_ref"] = r.question_ref;
  json scores = json::object();
  for (auto c : kAllCriteria) scores[std::string(to_string(c))] = r.scores[static_cast<int>(c)];
  j["scores"] = std::move(scores);
  return j;
}

QualityRating rating_from_json(const json& j) {
  try {
    QualityRating r;
    r.judge_id = j.at("judge_id").get<std::string>();
    r.question_ref = j.at("question_ref").get<std::string>();
    const auto& scores = j.at("scores");
    for (auto c : kAllCriteria) {
      const int v = scores.at(std::string(to_string(c))).get<int>();
      if (v < 1 || v > 5) throw FormatError("rating score out of range");
      r.scores[static_cast<int>(c)] = v;
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("quality rating: ") + e.what());
  }
}

}  // namespace labqg
