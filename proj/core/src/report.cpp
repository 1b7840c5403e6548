#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "labqg/bench.hpp"

namespace labqg {

namespace {

constexpr std::string_view kDimensionNames[] = {"model", "teler_level", "format", "qtype"};
constexpr std::string_view kDimensionHeadings[] = {"Model", "Level", "Question format", "Question type"};

std::string label_of(const RunRecord& r, Dimension d) {
  switch (d) {
    case Dimension::model: return r.model;
    case Dimension::teler_level: return std::string(to_string(r.level));
    case Dimension::format: return std::string(to_string(r.format));
    case Dimension::qtype: return std::string(to_string(r.qtype));
  }
  return {};
}

// Rows follow enum order for enumerated dimensions and name order for models.
std::pair<int, std::string> order_of(const RunRecord& r, Dimension d) {
  switch (d) {
    case Dimension::model: return {0, r.model};
    case Dimension::teler_level: return {level_number(r.level), {}};
    case Dimension::format: return {static_cast<int>(r.format), {}};
    case Dimension::qtype: return {static_cast<int>(r.qtype), {}};
  }
  return {};
}

std::string existence_group(const RunRecord& r) {
  return r.conversation_id + "|" + std::string(to_string(r.qtype)) + "|" +
         std::string(to_string(r.level)) + "|" + r.model;
}

// Numeric cell: rendered text plus the value used for top-of-column flags.
struct Value {
  std::string text;
  std::optional<double> number;
};

Value number(std::optional<double> v) {
  if (!v) return {"-", std::nullopt};
  auto text = format_3dp(*v);
  return {text, std::stod(text)};
}

struct Table {
  std::string kind;  // validity | quality
  Dimension dimension;
  std::vector<std::string> columns;
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  std::vector<std::vector<Value>> cells;  // [row][column]
};

std::vector<std::vector<bool>> top_flags(const Table& t) {
  std::vector<std::vector<bool>> flags(t.cells.size(), std::vector<bool>(t.columns.size(), false));
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    std::optional<double> best;
    for (const auto& row : t.cells) {
      if (row[c].number && (!best || *row[c].number > *best)) best = row[c].number;
    }
    for (std::size_t r = 0; r < t.cells.size(); ++r) {
      flags[r][c] = best && t.cells[r][c].number && *t.cells[r][c].number == *best;
    }
  }
  return flags;
}

std::vector<Table> tabulate(const ReportTables& tables) {
  Table v{"validity", tables.dimension, {}, {}, {}, {}};
  if (tables.show_json) v.columns.push_back("JSON");
  v.columns.push_back("Format");
  v.columns.push_back("Existence");
  for (const auto& row : tables.validity) {
    v.labels.push_back(row.label);
    v.counts.push_back(row.n);
    std::vector<Value> cells;
    if (tables.show_json) cells.push_back(number(row.json_accuracy));
    cells.push_back(number(row.format_accuracy));
    cells.push_back(number(row.existence));
    v.cells.push_back(std::move(cells));
  }

  Table q{"quality", tables.dimension, {}, {}, {}, {}};
  for (auto c : kAllCriteria) q.columns.emplace_back(display_name(c));
  q.columns.push_back("Average");
  q.columns.push_back("α_k");
  for (const auto& row : tables.quality) {
    q.labels.push_back(row.label);
    q.counts.push_back(row.quality ? row.quality->n_questions : 0);
    std::vector<Value> cells;
    for (std::size_t c = 0; c < kCriterionCount; ++c) {
      cells.push_back(number(row.quality ? std::optional(row.quality->per_criterion_mean[c])
                                         : std::nullopt));
    }
    cells.push_back(number(row.quality ? std::optional(row.quality->composite) : std::nullopt));
    if (row.quality && row.quality->alpha_error) {
      cells.push_back({std::string(to_string(*row.quality->alpha_error)), std::nullopt});
    } else {
      cells.push_back(number(row.quality ? row.quality->alpha : std::nullopt));
    }
    q.cells.push_back(std::move(cells));
  }
  return {v, q};
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(Dimension d) { return kDimensionNames[static_cast<int>(d)]; }

std::optional<Dimension> parse_dimension(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kDimensionNames[i] == name) return static_cast<Dimension>(i);
  }
  return std::nullopt;
}

std::string format_3dp(double value) {
  if (!std::isfinite(value)) return value != value ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  std::string text(buf, res.ptr);
  bool negative = false;
  if (!text.empty() && text[0] == '-') {
    negative = true;
    text.erase(0, 1);
  }
  const auto dot = text.find('.');
  std::string whole = dot == std::string::npos ? text : text.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
  const bool round_up = frac.size() > 3 && frac[3] >= '5';
  frac.resize(3, '0');
  std::string digits = whole + frac;
  if (round_up) {
    std::size_t i = digits.size();
    while (i > 0) {
      --i;
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        ++digits[i];
        break;
      }
      if (i == 0) digits.insert(digits.begin(), '1');
    }
  }
  std::string out = digits.substr(0, digits.size() - 3) + "." + digits.substr(digits.size() - 3);
  if (negative && out.find_first_not_of("0.") != std::string::npos) out.insert(0, "-");
  return out;
}

ReportTables aggregate(std::span<const RunRecord> records, Dimension group_by,
                       std::span<const QualityRating> extra_ratings) {
  if (records.empty()) throw EmptyStore("no records to aggregate");
  ReportTables tables;
  tables.dimension = group_by;
  tables.show_json = group_by != Dimension::format;

  std::map<std::pair<int, std::string>, std::vector<const RunRecord*>> rows;
  for (const auto& r : records) {
    if (r.status == RecordStatus::unsupported || !r.validity) continue;
    rows[order_of(r, group_by)].push_back(&r);
  }
  if (rows.empty()) throw EmptyStore("every stored cell is unsupported");

  std::map<std::string, std::vector<const QualityRating*>> extra_by_question;
  for (const auto& rating : extra_ratings) {
    extra_by_question[rating.question_ref].push_back(&rating);
  }

  for (const auto& [order, members] : rows) {
    const std::string label = label_of(*members.front(), group_by);

    std::vector<ScoredRecord> scored;
    for (const auto* r : members) scored.push_back({existence_group(*r), r->format, *r->validity});
    const auto v = score_validity(scored);
    tables.validity.push_back({label, v.json_accuracy, v.format_accuracy, v.existence_score, v.n});

    std::vector<QualityRating> ratings;
    std::set<std::pair<std::string, std::string>> seen;
    auto take = [&](const QualityRating& rating) {
      if (seen.insert({rating.judge_id, rating.question_ref}).second) ratings.push_back(rating);
    };
    for (const auto* r : members) {
      if (!r->question) continue;
      for (const auto& rating : r->ratings) take(rating);
      if (auto it = extra_by_question.find(r->key()); it != extra_by_question.end()) {
        for (const auto* rating : it->second) take(*rating);
      }
    }
    QualityRow row{label, std::nullopt};
    if (!ratings.empty()) row.quality = aggregate_quality(ratings);
    tables.quality.push_back(std::move(row));
  }
  return tables;
}

Report build_report(std::string plan_id, std::span<const RunRecord> records,
                    std::span<const QualityRating> extra_ratings,
                    std::span<const Dimension> dimensions) {
  if (records.empty()) throw EmptyStore("run " + plan_id + " has no records");
  Report report;
  report.plan_id = std::move(plan_id);
  for (const auto& r : records) ++report.counts[r.status];
  for (auto d : dimensions) report.tables.push_back(aggregate(records, d, extra_ratings));
  return report;
}

std::string render_report(const Report& report, ReportFormat target) {
  std::ostringstream out;
  if (target == ReportFormat::csv) {
    out << "table,group_by,label,n,column,value,top\n";
    for (const auto& tables : report.tables) {
      for (const auto& t : tabulate(tables)) {
        const auto flags = top_flags(t);
        for (std::size_t r = 0; r < t.labels.size(); ++r) {
          for (std::size_t c = 0; c < t.columns.size(); ++c) {
            out << t.kind << ',' << to_string(t.dimension) << ',' << csv_field(t.labels[r]) << ','
                << t.counts[r] << ',' << csv_field(t.columns[c]) << ','
                << csv_field(t.cells[r][c].number ? t.cells[r][c].text : "") << ','
                << (flags[r][c] ? 1 : 0) << '\n';
          }
        }
      }
    }
    return out.str();
  }

  out << "# Benchmark report: " << report.plan_id << "\n\n";
  std::size_t total = 0;
  for (const auto& [status, n] : report.counts) total += n;
  out << "Records: " << total;
  const char* sep = " (";
  for (auto s : {RecordStatus::ok, RecordStatus::invalid, RecordStatus::transport_failed,
                 RecordStatus::unsupported}) {
    const auto it = report.counts.find(s);
    out << sep << to_string(s) << ' ' << (it == report.counts.end() ? 0 : it->second);
    sep = ", ";
  }
  out << ")\n\n"
      << "Validity columns: JSON = share of outputs holding a parseable JSON object; "
         "Format = share of parsed outputs matching the requested format; "
         "Existence = formats (0-5) with a valid question per conversation, type, level and "
         "model, averaged over those groups. Grouped by format, Existence is the share of "
         "groups with a valid question in that format.\n\n"
      << "Quality columns: judge scores on the 1-5 scale averaged per question over judges and "
         "then over questions; Average is the mean over the ten criteria; α_k is Krippendorff's "
         "alpha with the ordinal metric over (question, criterion) items, judges as raters.\n\n"
      << "Values are rounded half up to three decimals; the top value in each column is in "
         "bold.\n";

  for (const auto& tables : report.tables) {
    for (const auto& t : tabulate(tables)) {
      const auto flags = top_flags(t);
      out << "\n## " << (t.kind == "validity" ? "Validity" : "Quality") << " by "
          << to_string(t.dimension) << "\n\n| "
          << kDimensionHeadings[static_cast<int>(t.dimension)] << " | N |";
      for (const auto& c : t.columns) out << ' ' << c << " |";
      out << "\n|---|---:|";
      for (std::size_t c = 0; c < t.columns.size(); ++c) out << "---:|";
      out << '\n';
      for (std::size_t r = 0; r < t.labels.size(); ++r) {
        out << "| " << t.labels[r] << " | " << t.counts[r] << " |";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
          const auto& cell = t.cells[r][c];
          out << ' ' << (flags[r][c] ? "**" + cell.text + "**" : cell.text) << " |";
        }
        out << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace labqg
