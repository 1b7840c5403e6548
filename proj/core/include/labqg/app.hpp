#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labqg/bench.hpp"
#include "labqg/config.hpp"
#include "labqg/dialogue.hpp"
#include "labqg/store.hpp"

namespace labqg {

/// The teacher workflow over a workspace. Both the CLI and the HTTP service
/// are thin adapters over these calls; results are JSON documents.
class App {
 public:
  explicit App(AppConfig config, std::shared_ptr<ChatTransport> transport = {});

  const AppConfig& config() const { return config_; }
  Workspace& workspace() { return workspace_; }
  Gateway& gateway() { return gateway_; }

  /// {"session": ..., "current_prompt": str|null}
  json start_session(std::string_view sim_id, std::string_view title,
                     std::string session_id = {});
  /// An absent answer skips the pending prompt.
  json answer(std::string_view session_id, const std::optional<std::string>& answer);
  json session_view(std::string_view session_id) const;

  /// {"session": ..., "draft": ..., "attempts": n}. Uses the first
  /// configured model unless one is named.
  json extract(std::string_view session_id, std::optional<std::string> model = {});

  /// Applies edits to the session's draft and stores the committed sim.
  json commit(std::string_view sim_id, std::string_view session_id,
              const std::vector<TeacherEdit>& edits);
  /// Stores a complete representation directly. Throws ValidationFailed.
  json put_representation(std::string_view sim_id, const SimulationRepresentation& s);
  json get_sim(std::string_view sim_id) const;
  SimulationRepresentation representation(std::string_view sim_id) const;

  /// One generation, persisted whatever its outcome:
  /// {"question_id", "sim_ref", "record", "ratings"}. Throws TypeUnsupported.
  json generate(std::string_view sim_id, QuestionType qtype, QuestionFormat format,
                TelerLevel level, std::optional<std::string> model = {});
  json get_question(std::string_view question_id) const;
  /// Rates a stored valid question with the named judges (all when empty).
  /// {"question_id", "ratings", "aggregate"}. Throws InvalidState when the
  /// generation holds no valid question.
  json judge_question(std::string_view question_id, const std::vector<std::string>& judges = {});

  /// Renders the report of a stored run and writes report.md / report.csv
  /// next to its records. Throws NotFound or EmptyStore.
  std::string run_report(std::string_view plan_id, ReportFormat format = ReportFormat::markdown);

 private:
  AppConfig config_;
  Workspace workspace_;
  Gateway gateway_;
};

json to_json(const QualityAggregate& q);

}  // namespace labqg
