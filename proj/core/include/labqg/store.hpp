#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labqg/dialogue.hpp"

namespace labqg {

/// File-backed state shared by the CLI and the HTTP service:
///   <root>/sessions/<id>.json   dialogue sessions
///   <root>/drafts/<id>.json     extracted drafts, keyed by session
///   <root>/sims/<id>.json       committed representations with provenance
///   <root>/questions/<id>.json  interactive generations and their ratings
///   <root>/runs/<plan_id>/      benchmark run stores
/// Documents are replaced atomically (write then rename).
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path runs_root() const { return root_ / "runs"; }

  void put_session(const DialogueSession& session);
  /// Throws NotFound.
  DialogueSession get_session(std::string_view session_id) const;

  void put_draft(std::string_view session_id, const DraftRepresentation& draft);
  std::optional<DraftRepresentation> get_draft(std::string_view session_id) const;

  void put_sim(std::string_view sim_id, const json& document);
  /// Throws NotFound.
  json get_sim(std::string_view sim_id) const;
  std::vector<std::string> sim_ids() const;

  void put_question(std::string_view question_id, const json& document);
  /// Throws NotFound.
  json get_question(std::string_view question_id) const;

  /// One mutex per key, e.g. "session:<id>", for single-writer sections.
  std::mutex& lock_for(const std::string& key);

 private:
  void put(std::string_view kind, std::string_view id, const json& document);
  std::optional<json> get(std::string_view kind, std::string_view id) const;

  std::filesystem::path root_;
  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Ids used as file names: letters, digits, '.', '_' and '-', not starting
/// with '.'. Throws PreconditionError otherwise.
void check_storage_id(std::string_view id);

}  // namespace labqg
