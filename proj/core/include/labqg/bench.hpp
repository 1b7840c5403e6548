#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labqg/answer_parser.hpp"
#include "labqg/gateway.hpp"
#include "labqg/judge.hpp"
#include "labqg/prompt_forge.hpp"
#include "labqg/sim_model.hpp"
#include "labqg/taxonomy.hpp"

namespace labqg {

struct PlanConversation {
  std::string conversation_id;
  SimulationRepresentation representation;
  std::uint64_t seed = 0;
};

struct Cell {
  std::size_t conversation = 0;  // index into RunPlan::conversations
  QuestionType qtype = QuestionType::conceptual;
  QuestionFormat format = QuestionFormat::multiple_choice;
  TelerLevel level = TelerLevel::L1;
  std::string model;  // ModelConfig::name
  bool supported = true;
};

struct RunPlan {
  std::string plan_id;
  std::vector<PlanConversation> conversations;
  std::vector<ModelConfig> models;
  std::vector<TelerLevel> levels;
  std::vector<Cell> cells;
};

/// One cell per (conversation, type, format, level, model), ordered by
/// conversation index, type, format, level, then model name. Cells whose type
/// the representation cannot support stay in the plan, marked unsupported.
/// An empty plan_id is replaced by a digest of the plan's contents.
RunPlan make_plan(std::vector<PlanConversation> conversations, std::vector<ModelConfig> models,
                  std::vector<TelerLevel> levels, std::string plan_id = {});

/// Slice-selection seed shared by all formats of one (sim, type, level).
std::uint64_t cell_seed(const PlanConversation& conversation, QuestionType qtype,
                        TelerLevel level);

/// "conversation|qtype|format|level|model"
std::string cell_key(const RunPlan& plan, const Cell& cell);

json to_json(const RunPlan& plan);
RunPlan run_plan_from_json(const json& j);

enum class RecordStatus { ok, transport_failed, invalid, unsupported };

std::string_view to_string(RecordStatus s);
std::optional<RecordStatus> parse_record_status(std::string_view name);

struct RunRecord {
  static constexpr int kVersion = 1;

  std::string plan_id;
  std::string conversation_id;
  std::string sim_ref;
  QuestionType qtype = QuestionType::conceptual;
  QuestionFormat format = QuestionFormat::multiple_choice;
  TelerLevel level = TelerLevel::L1;
  std::string model;
  std::uint64_t seed = 0;
  std::string prompt_digest;
  std::optional<ContextSlice> slice;
  std::optional<RawGeneration> generation;
  std::optional<ValidityRecord> validity;  // absent only for unsupported cells
  std::optional<ParsedQuestion> question;
  std::vector<QualityRating> ratings;
  RecordStatus status = RecordStatus::unsupported;

  std::string key() const;
};

json to_json(const RunRecord& r);
RunRecord run_record_from_json(const json& j);

/// sha256 over the record with generation timestamps removed; equal for two
/// runs of a deterministic model.
std::string record_digest(const RunRecord& r);

/// context_for -> build_prompt -> generate -> classify, then optional
/// judging. Transport failures end up in the record.
RunRecord run_cell(const RunPlan& plan, const Cell& cell, Gateway& gateway,
                   std::span<const ModelConfig> judges = {},
                   CallMode mode = CallMode::benchmark);

/// Judges one question with each judge; unparsable replies are dropped.
std::vector<QualityRating> rate_question(const ParsedQuestion& question, const ContextSlice& slice,
                                         std::string_view question_ref, Gateway& gateway,
                                         std::span<const ModelConfig> judges,
                                         CallMode mode = CallMode::benchmark);

/// Append-only record store for one plan: <root>/<plan_id>/ holding
/// plan.json, records.jsonl, records.idx and ratings.jsonl.
class RunStore {
 public:
  RunStore(const std::filesystem::path& runs_root, std::string_view plan_id);

  const std::filesystem::path& dir() const { return dir_; }
  bool has_plan() const;
  void save_plan(const RunPlan& plan);
  RunPlan load_plan() const;

  /// Appends one record. Throws StoreError on I/O failure or a duplicate key.
  void append(const RunRecord& record);
  void append_ratings(std::span<const QualityRating> ratings);

  std::set<std::string> keys() const;
  /// All complete records; a torn final line is ignored.
  std::vector<RunRecord> records() const;
  std::vector<QualityRating> extra_ratings() const;

 private:
  void repair_tail();

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::set<std::string> keys_;
  bool loaded_ = false;
};

struct ExecuteOptions {
  std::size_t parallelism = 4;
  std::vector<ModelConfig> judges;       // empty disables judging
  std::optional<std::size_t> stop_after;  // process at most this many new cells
};

struct RunSummary {
  std::map<RecordStatus, std::size_t> counts;  // over every record in the store
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t total() const;
};

/// Runs every cell without a stored record. Throws StoreError.
RunSummary execute(const RunPlan& plan, Gateway& gateway, RunStore& store,
                   const ExecuteOptions& options = {});

// ---------------------------------------------------------------------------
// Aggregation and reports.

enum class Dimension { model, teler_level, format, qtype };

inline constexpr std::array<Dimension, 4> kAllDimensions = {
    Dimension::model, Dimension::teler_level, Dimension::format, Dimension::qtype};

std::string_view to_string(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view name);

struct ValidityRow {
  std::string label;
  double json_accuracy = 0.0;
  std::optional<double> format_accuracy;
  double existence = 0.0;
  std::size_t n = 0;
};

struct QualityRow {
  std::string label;
  std::optional<QualityAggregate> quality;  // absent when nothing was rated
};

struct ReportTables {
  Dimension dimension = Dimension::model;
  bool show_json = true;  // false for the format dimension
  std::vector<ValidityRow> validity;
  std::vector<QualityRow> quality;
};

/// Groups records (unsupported cells excluded) along one dimension. Extra
/// ratings are joined to records by key. Throws EmptyStore when no record
/// exists.
ReportTables aggregate(std::span<const RunRecord> records, Dimension group_by,
                       std::span<const QualityRating> extra_ratings = {});

struct Report {
  std::string plan_id;
  std::map<RecordStatus, std::size_t> counts;
  std::vector<ReportTables> tables;
};

Report build_report(std::string plan_id, std::span<const RunRecord> records,
                    std::span<const QualityRating> extra_ratings = {},
                    std::span<const Dimension> dimensions = kAllDimensions);

enum class ReportFormat { markdown, csv };

std::string render_report(const Report& report, ReportFormat target);

/// Round half up (away from zero) at three decimals, based on the shortest
/// decimal form of the value: 4.2455 -> "4.246".
std::string format_3dp(double value);

}  // namespace labqg
