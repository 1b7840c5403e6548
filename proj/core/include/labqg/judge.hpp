#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labqg/answer_parser.hpp"
#include "labqg/taxonomy.hpp"

namespace labqg {

enum class Criterion {
  fluency,
  correctness,
  clarity,
  specificity,
  bias,
  relevance,
  practicality,
  alignment,
  feasibility,
  critical_thinking,
};

inline constexpr std::size_t kCriterionCount = 10;

inline constexpr std::array<Criterion, kCriterionCount> kAllCriteria = {
    Criterion::fluency,      Criterion::correctness, Criterion::clarity,
    Criterion::specificity,  Criterion::bias,        Criterion::relevance,
    Criterion::practicality, Criterion::alignment,   Criterion::feasibility,
    Criterion::critical_thinking,
};

/// Key used in the judge score schema, e.g. "critical_thinking".
std::string_view to_string(Criterion c);
/// Column heading, e.g. "Critical Thinking".
std::string_view display_name(Criterion c);
/// The yes/no question the judge answers on the 1-5 scale.
std::string_view rubric_question(Criterion c);

inline constexpr std::string_view kScaleLow = "absolutely not";
inline constexpr std::string_view kScaleHigh = "yes, definitely";

using CriterionScores = std::array<int, kCriterionCount>;

struct QualityRating {
  std::string judge_id;
  std::string question_ref;
  CriterionScores scores{};
  bool operator==(const QualityRating&) const = default;
};

struct RubricPrompt {
  std::string text;
  json score_schema;
};

RubricPrompt rubric_prompt(const ParsedQuestion& question, const ContextSlice& slice);

enum class RatingFailure {
  no_json,
  malformed_json,
  schema_mismatch,
  missing_criterion,
  score_out_of_range,
};

std::string_view to_string(RatingFailure f);

Parsed<QualityRating, RatingFailure> parse_rating(std::string_view raw_text,
                                                  std::string_view judge_id,
                                                  std::string_view question_ref);

// ---------------------------------------------------------------------------
// Krippendorff's alpha.

enum class MeasurementLevel { nominal, ordinal, interval };

enum class AlphaError {
  degenerate_data,    // expected disagreement is zero
  insufficient_data,  // fewer than two items with two or more ratings
};

std::string_view to_string(AlphaError e);

/// Rows are raters, columns are items; nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<int>>>;

/// Coincidence-matrix alpha, 1 - D_observed / D_expected. Items with fewer
/// than two ratings are not pairable and are skipped.
Parsed<double, AlphaError> krippendorff_alpha(const RatingMatrix& ratings,
                                              MeasurementLevel level = MeasurementLevel::ordinal);

// ---------------------------------------------------------------------------

struct QualityAggregate {
  std::array<double, kCriterionCount> per_criterion_mean{};
  double composite = 0.0;
  std::optional<double> alpha;
  std::optional<AlphaError> alpha_error;
  std::size_t n_questions = 0;
  std::size_t n_judges = 0;
  std::vector<std::string> flagged_questions;  // rated by fewer than n_judges
};

/// Per question: mean over judges, then over criteria. Set values average the
/// per-question values. Alpha runs over (question, criterion) items with
/// judges as raters, ordinal metric. Throws EmptyInput on no ratings and
/// PreconditionError on a repeated (judge, question) pair.
QualityAggregate aggregate_quality(std::span<const QualityRating> ratings);

json to_json(const QualityRating& r);
QualityRating rating_from_json(const json& j);

}  // namespace labqg
