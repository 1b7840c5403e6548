#include "labqg/app.hpp"

#include <fstream>

namespace labqg {

namespace {

json session_doc(const DialogueSession& s) {
  json j = json::object();
  j["session"] = to_json(s);
  const auto prompt = current_prompt(s);
  j["current_prompt"] = prompt ? json(*prompt) : json(nullptr);
  return j;
}

std::shared_ptr<ChatTransport> or_default(std::shared_ptr<ChatTransport> t) {
  return t ? std::move(t) : std::make_shared<RoutingTransport>();
}

json sim_doc(const SimulationRepresentation& s, const std::map<std::string, Origin>& provenance,
             std::string_view session_id) {
  json j = json::object();
  j["representation"] = to_json(s);
  j["provenance"] = provenance_to_json(provenance);
  j["session_id"] = session_id.empty() ? json(nullptr) : json(std::string(session_id));
  j["committed_at"] = utc_now_iso8601();
  return j;
}

}  // namespace

json to_json(const QualityAggregate& q) {
  json j = json::object();
  json per = json::object();
  for (std::size_t c = 0; c < kCriterionCount; ++c) {
    per[std::string(to_string(kAllCriteria[c]))] = q.per_criterion_mean[c];
  }
  j["per_criterion_mean"] = std::move(per);
  j["composite"] = q.composite;
  j["alpha"] = q.alpha ? json(*q.alpha) : json(nullptr);
  j["alpha_error"] = q.alpha_error ? json(std::string(to_string(*q.alpha_error))) : json(nullptr);
  j["n_questions"] = q.n_questions;
  j["n_judges"] = q.n_judges;
  j["flagged_questions"] = q.flagged_questions;
  return j;
}

App::App(AppConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)),
      workspace_(config_.store_root),
      gateway_(or_default(std::move(transport))) {
  validate_app_config(config_);
}

json App::start_session(std::string_view sim_id, std::string_view title, std::string session_id) {
  if (!session_id.empty()) check_storage_id(session_id);
  check_storage_id(sim_id);
  auto session = labqg::start_session(sim_id, title, std::move(session_id));
  std::lock_guard lock(workspace_.lock_for("session:" + session.session_id));
  try {
    workspace_.get_session(session.session_id);
    throw InvalidState("session '" + session.session_id + "' already exists");
  } catch (const NotFound&) {
  }
  workspace_.put_session(session);
  return session_doc(session);
}

json App::answer(std::string_view session_id, const std::optional<std::string>& answer) {
  std::lock_guard lock(workspace_.lock_for("session:" + std::string(session_id)));
  const auto session = workspace_.get_session(session_id);
  const auto next = answer ? record_answer(session, *answer) : skip_prompt(session);
  workspace_.put_session(next);
  return session_doc(next);
}

json App::session_view(std::string_view session_id) const {
  auto doc = session_doc(workspace_.get_session(session_id));
  if (auto draft = workspace_.get_draft(session_id)) doc["draft"] = to_json(*draft);
  return doc;
}

json App::extract(std::string_view session_id, std::optional<std::string> model) {
  const auto& cfg = model ? find_model(config_, *model) : config_.models.front();
  std::lock_guard lock(workspace_.lock_for("session:" + std::string(session_id)));
  const auto session = workspace_.get_session(session_id);
  auto extraction = extract_structure(session, gateway_, cfg);
  workspace_.put_draft(session_id, extraction.draft);
  workspace_.put_session(extraction.session);
  json j = session_doc(extraction.session);
  j["draft"] = to_json(extraction.draft);
  j["attempts"] = extraction.attempts;
  return j;
}

json App::commit(std::string_view sim_id, std::string_view session_id,
                 const std::vector<TeacherEdit>& edits) {
  check_storage_id(sim_id);
  std::lock_guard session_lock(workspace_.lock_for("session:" + std::string(session_id)));
  std::lock_guard sim_lock(workspace_.lock_for("sim:" + std::string(sim_id)));
  const auto session = workspace_.get_session(session_id);
  if (session.sim_ref != sim_id) {
    throw PreconditionError("session '" + session.session_id + "' belongs to simulation '" +
                            session.sim_ref + "'");
  }
  const auto draft = workspace_.get_draft(session_id);
  if (!draft && session.status != SessionStatus::committed) {
    throw InvalidState("session '" + session.session_id + "' has no extracted draft");
  }
  auto committed = apply_teacher_edits(session, draft.value_or(DraftRepresentation{}), edits);
  auto doc = sim_doc(committed.representation, committed.provenance, session_id);
  workspace_.put_sim(sim_id, doc);
  workspace_.put_session(committed.session);
  return doc;
}

json App::put_representation(std::string_view sim_id, const SimulationRepresentation& s) {
  check_storage_id(sim_id);
  if (s.sim_id != sim_id) {
    throw ValidationFailed("representation sim_id '" + s.sim_id + "' does not match '" +
                           std::string(sim_id) + "'");
  }
  if (auto report = validate_representation(s); !report.empty()) {
    throw ValidationFailed(InvalidRepresentation(std::move(report)).what());
  }
  std::lock_guard lock(workspace_.lock_for("sim:" + std::string(sim_id)));
  auto doc = sim_doc(s, {}, {});
  workspace_.put_sim(sim_id, doc);
  return doc;
}

json App::get_sim(std::string_view sim_id) const { return workspace_.get_sim(sim_id); }

SimulationRepresentation App::representation(std::string_view sim_id) const {
  return representation_from_json(workspace_.get_sim(sim_id).at("representation"),
                                  ParseMode::lenient);
}

json App::generate(std::string_view sim_id, QuestionType qtype, QuestionFormat format,
                   TelerLevel level, std::optional<std::string> model) {
  const auto& cfg = model ? find_model(config_, *model) : config_.models.front();
  const auto s = representation(sim_id);
  if (!supported_types(s).contains(qtype)) {
    throw TypeUnsupported("simulation '" + s.sim_id + "' cannot support " +
                          std::string(to_string(qtype)) + " questions");
  }
  const std::string question_id = random_token("q");
  auto plan = make_plan({{s.sim_id, s, 0}}, {cfg}, {level}, "interactive");
  const Cell cell{0, qtype, format, level, cfg.name, true};
  const auto record = run_cell(plan, cell, gateway_, {}, CallMode::interactive);

  json doc = json::object();
  doc["question_id"] = question_id;
  doc["sim_ref"] = s.sim_id;
  doc["record"] = to_json(record);
  doc["ratings"] = json::array();
  workspace_.put_question(question_id, doc);
  return doc;
}

json App::get_question(std::string_view question_id) const {
  return workspace_.get_question(question_id);
}

json App::judge_question(std::string_view question_id, const std::vector<std::string>& judges) {
  std::vector<ModelConfig> panel;
  if (judges.empty()) {
    panel = config_.judges;
  } else {
    for (const auto& name : judges) panel.push_back(find_judge(config_, name));
  }
  if (panel.empty()) throw ConfigError("no judges configured");

  std::lock_guard lock(workspace_.lock_for("question:" + std::string(question_id)));
  auto doc = workspace_.get_question(question_id);
  const auto record = run_record_from_json(doc.at("record"));
  if (!record.question || !record.slice) {
    throw InvalidState("question '" + std::string(question_id) +
                       "' holds no valid question to judge");
  }
  const auto fresh = rate_question(*record.question, *record.slice, question_id, gateway_, panel,
                                   CallMode::interactive);
  if (fresh.empty()) throw GatewayError("no judge returned a usable rating");

  std::vector<QualityRating> ratings;
  for (const auto& r : doc.at("ratings")) {
    auto rating = rating_from_json(r);
    const bool replaced = std::any_of(fresh.begin(), fresh.end(), [&](const QualityRating& f) {
      return f.judge_id == rating.judge_id;
    });
    if (!replaced) ratings.push_back(std::move(rating));
  }
  ratings.insert(ratings.end(), fresh.begin(), fresh.end());
  doc["ratings"] = json::array();
  for (const auto& r : ratings) doc["ratings"].push_back(to_json(r));
  workspace_.put_question(question_id, doc);

  json out = json::object();
  out["question_id"] = std::string(question_id);
  out["ratings"] = doc["ratings"];
  out["aggregate"] = to_json(aggregate_quality(ratings));
  return out;
}

std::string App::run_report(std::string_view plan_id, ReportFormat format) {
  check_storage_id(plan_id);
  RunStore store(workspace_.runs_root(), plan_id);
  if (!store.has_plan()) throw NotFound("no run '" + std::string(plan_id) + "'");
  const auto records = store.records();
  const auto extra = store.extra_ratings();
  const auto report = build_report(std::string(plan_id), records, extra);
  for (auto [target, name] : {std::pair{ReportFormat::markdown, "report.md"},
                              std::pair{ReportFormat::csv, "report.csv"}}) {
    std::ofstream out(store.dir() / name, std::ios::binary | std::ios::trunc);
    out << render_report(report, target);
    if (!out) throw StoreError("cannot write " + (store.dir() / name).string());
  }
  return render_report(report, format);
}

}  // namespace labqg
