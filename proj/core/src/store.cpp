#include "labqg/store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace labqg {

namespace fs = std::filesystem;

void check_storage_id(std::string_view id) {
  const bool ok = !id.empty() && id.size() <= 128 && id.front() != '.' &&
                  std::all_of(id.begin(), id.end(), [](unsigned char c) {
                    return std::isalnum(c) || c == '.' || c == '_' || c == '-';
                  });
  if (!ok) throw PreconditionError("invalid id '" + std::string(id) + "'");
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

void Workspace::put(std::string_view kind, std::string_view id, const json& document) {
  check_storage_id(id);
  const auto dir = root_ / std::string(kind);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StoreError("cannot create " + dir.string() + ": " + ec.message());
  const auto target = dir / (std::string(id) + ".json");
  const auto tmp = dir / (std::string(id) + ".json." + random_token("tmp"));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << document.dump(2) << '\n';
    if (!out) throw StoreError("cannot write " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) throw StoreError("cannot replace " + target.string() + ": " + ec.message());
}

std::optional<json> Workspace::get(std::string_view kind, std::string_view id) const {
  try {
    check_storage_id(id);
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
  const auto path = root_ / std::string(kind) / (std::string(id) + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  auto j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw StoreError(path.string() + " is corrupt");
  return j;
}

void Workspace::put_session(const DialogueSession& session) {
  put("sessions", session.session_id, to_json(session));
}

DialogueSession Workspace::get_session(std::string_view session_id) const {
  auto j = get("sessions", session_id);
  if (!j) throw NotFound("no session '" + std::string(session_id) + "'");
  return session_from_json(*j);
}

void Workspace::put_draft(std::string_view session_id, const DraftRepresentation& draft) {
  put("drafts", session_id, to_json(draft));
}

std::optional<DraftRepresentation> Workspace::get_draft(std::string_view session_id) const {
  auto j = get("drafts", session_id);
  if (!j) return std::nullopt;
  return draft_from_json(*j);
}

void Workspace::put_sim(std::string_view sim_id, const json& document) {
  put("sims", sim_id, document);
}

json Workspace::get_sim(std::string_view sim_id) const {
  auto j = get("sims", sim_id);
  if (!j) throw NotFound("no simulation '" + std::string(sim_id) + "'");
  return *j;
}

std::vector<std::string> Workspace::sim_ids() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "sims", ec)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Workspace::put_question(std::string_view question_id, const json& document) {
  put("questions", question_id, document);
}

json Workspace::get_question(std::string_view question_id) const {
  auto j = get("questions", question_id);
  if (!j) throw NotFound("no question '" + std::string(question_id) + "'");
  return *j;
}

std::mutex& Workspace::lock_for(const std::string& key) {
  std::lock_guard lock(locks_mu_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

}  // namespace labqg
