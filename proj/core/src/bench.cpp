#include "labqg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace labqg {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kRecordStatusNames[] = {"ok", "transport_failed", "invalid",
                                                   "unsupported"};

const ModelConfig& model_named(const RunPlan& plan, const std::string& name) {
  for (const auto& m : plan.models) {
    if (m.name == name) return m;
  }
  throw ConfigError("plan " + plan.plan_id + " has no model named '" + name + "'");
}

json plan_body(const RunPlan& plan) {
  json j = json::object();
  j["conversations"] = json::array();
  for (const auto& c : plan.conversations) {
    json conv = json::object();
    conv["conversation_id"] = c.conversation_id;
    conv["seed"] = c.seed;
    conv["representation"] = to_json(c.representation);
    j["conversations"].push_back(std::move(conv));
  }
  j["models"] = json::array();
  for (const auto& m : plan.models) j["models"].push_back(to_json(m));
  j["levels"] = json::array();
  for (auto l : plan.levels) j["levels"].push_back(std::string(to_string(l)));
  return j;
}

template <class T, class Parse>
T parse_enum(const json& j, const char* key, Parse parse) {
  const auto name = j.at(key).get<std::string>();
  const auto value = parse(name);
  if (!value) throw FormatError(std::string("unknown ") + key + " '" + name + "'");
  return *value;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Complete lines only; a final line without '\n' is a torn write.
std::vector<std::string_view> complete_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) break;
    if (nl > start) out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

void truncate_torn_tail(const fs::path& p) {
  if (!fs::exists(p)) return;
  const auto text = read_file(p);
  if (text.empty() || text.back() == '\n') return;
  const auto last = text.rfind('\n');
  fs::resize_file(p, last == std::string::npos ? 0 : last + 1);
}

void append_line(const fs::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw StoreError("cannot append to " + p.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// Plans

std::uint64_t cell_seed(const PlanConversation& conversation, QuestionType qtype,
                        TelerLevel level) {
  return stable_hash64(conversation.representation.sim_id + "|" + std::string(to_string(qtype)) +
                       "|" + std::string(to_string(level)) + "|" +
                       std::to_string(conversation.seed));
}

RunPlan make_plan(std::vector<PlanConversation> conversations, std::vector<ModelConfig> models,
                  std::vector<TelerLevel> levels, std::string plan_id) {
  RunPlan plan;
  plan.conversations = std::move(conversations);
  plan.models = std::move(models);
  std::sort(plan.models.begin(), plan.models.end(),
            [](const ModelConfig& a, const ModelConfig& b) { return a.name < b.name; });
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  plan.levels = std::move(levels);

  for (std::size_t c = 0; c < plan.conversations.size(); ++c) {
    const auto supported = supported_types(plan.conversations[c].representation);
    for (auto qtype : kAllQuestionTypes) {
      for (auto format : kAllQuestionFormats) {
        for (auto level : plan.levels) {
          for (const auto& model : plan.models) {
            plan.cells.push_back({c, qtype, format, level, model.name, supported.contains(qtype)});
          }
        }
      }
    }
  }
  plan.plan_id = plan_id.empty() ? "plan-" + sha256_hex(plan_body(plan).dump()).substr(0, 12)
                                 : std::move(plan_id);
  return plan;
}

std::string cell_key(const RunPlan& plan, const Cell& cell) {
  return plan.conversations.at(cell.conversation).conversation_id + "|" +
         std::string(to_string(cell.qtype)) + "|" + std::string(to_string(cell.format)) + "|" +
         std::string(to_string(cell.level)) + "|" + cell.model;
}

json to_json(const RunPlan& plan) {
  json j = json::object();
  j["plan_id"] = plan.plan_id;
  const json body = plan_body(plan);
  for (const auto& [k, v] : body.items()) j[k] = v;
  j["cell_count"] = plan.cells.size();
  return j;
}

RunPlan run_plan_from_json(const json& j) {
  try {
    std::vector<PlanConversation> conversations;
    for (const auto& c : j.at("conversations")) {
      conversations.push_back({c.at("conversation_id").get<std::string>(),
                               representation_from_json(c.at("representation"), ParseMode::strict),
                               c.at("seed").get<std::uint64_t>()});
    }
    std::vector<ModelConfig> models;
    for (const auto& m : j.at("models")) models.push_back(model_config_from_json(m));
    std::vector<TelerLevel> levels;
    for (const auto& l : j.at("levels")) {
      const auto level = parse_teler_level(l.get<std::string>());
      if (!level) throw FormatError("unknown level '" + l.get<std::string>() + "'");
      levels.push_back(*level);
    }
    return make_plan(std::move(conversations), std::move(models), std::move(levels),
                     j.at("plan_id").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Records

std::string_view to_string(RecordStatus s) { return kRecordStatusNames[static_cast<int>(s)]; }

std::optional<RecordStatus> parse_record_status(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kRecordStatusNames[i] == name) return static_cast<RecordStatus>(i);
  }
  return std::nullopt;
}

std::string RunRecord::key() const {
  return conversation_id + "|" + std::string(to_string(qtype)) + "|" +
         std::string(to_string(format)) + "|" + std::string(to_string(level)) + "|" + model;
}

json to_json(const RunRecord& r) {
  json j = json::object();
  j["v"] = RunRecord::kVersion;
  j["plan_id"] = r.plan_id;
  j["key"] = r.key();
  j["conversation_id"] = r.conversation_id;
  j["sim_ref"] = r.sim_ref;
  j["qtype"] = std::string(to_string(r.qtype));
  j["format"] = std::string(to_string(r.format));
  j["level"] = std::string(to_string(r.level));
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["status"] = std::string(to_string(r.status));
  j["prompt_digest"] = r.prompt_digest;
  j["slice"] = r.slice ? to_json(*r.slice) : json(nullptr);
  j["generation"] = r.generation ? to_json(*r.generation) : json(nullptr);
  j["validity"] = r.validity ? to_json(*r.validity) : json(nullptr);
  j["question"] = r.question ? to_json(*r.question) : json(nullptr);
  j["ratings"] = json::array();
  for (const auto& rating : r.ratings) j["ratings"].push_back(to_json(rating));
  return j;
}

RunRecord run_record_from_json(const json& j) {
  try {
    if (j.at("v").get<int>() != RunRecord::kVersion) {
      throw FormatError("unsupported record version " + j.at("v").dump());
    }
    RunRecord r;
    r.plan_id = j.at("plan_id").get<std::string>();
    r.conversation_id = j.at("conversation_id").get<std::string>();
    r.sim_ref = j.at("sim_ref").get<std::string>();
    r.qtype = parse_enum<QuestionType>(j, "qtype", parse_question_type);
    r.format = parse_enum<QuestionFormat>(j, "format", parse_question_format);
    r.level = parse_enum<TelerLevel>(j, "level", parse_teler_level);
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.status = parse_enum<RecordStatus>(j, "status", parse_record_status);
    r.prompt_digest = j.value("prompt_digest", "");
    if (!j.at("slice").is_null()) r.slice = slice_from_json(j["slice"]);
    if (!j.at("generation").is_null()) r.generation = raw_generation_from_json(j["generation"]);
    if (!j.at("validity").is_null()) r.validity = validity_from_json(j["validity"]);
    if (!j.at("question").is_null()) r.question = parsed_question_from_json(j["question"]);
    for (const auto& rating : j.value("ratings", json::array())) {
      r.ratings.push_back(rating_from_json(rating));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("run record: ") + e.what());
  }
}

std::string record_digest(const RunRecord& r) {
  json j = to_json(r);
  if (j["generation"].is_object()) {
    j["generation"].erase("started_at");
    j["generation"].erase("finished_at");
  }
  return sha256_hex(j.dump());
}

std::vector<QualityRating> rate_question(const ParsedQuestion& question, const ContextSlice& slice,
                                         std::string_view question_ref, Gateway& gateway,
                                         std::span<const ModelConfig> judges, CallMode mode) {
  std::vector<QualityRating> out;
  for (const auto& judge : judges) {
    const auto gen = gateway.judge_rate(question, slice, judge, mode);
    if (gen.transport_status != TransportStatus::ok) continue;
    auto rating = parse_rating(gen.raw_text, judge.name, question_ref);
    if (rating) out.push_back(std::move(rating.value()));
  }
  return out;
}

RunRecord run_cell(const RunPlan& plan, const Cell& cell, Gateway& gateway,
                   std::span<const ModelConfig> judges, CallMode mode) {
  const auto& conversation = plan.conversations.at(cell.conversation);
  RunRecord r;
  r.plan_id = plan.plan_id;
  r.conversation_id = conversation.conversation_id;
  r.sim_ref = conversation.representation.sim_id;
  r.qtype = cell.qtype;
  r.format = cell.format;
  r.level = cell.level;
  r.model = cell.model;
  r.seed = cell_seed(conversation, cell.qtype, cell.level);
  if (!cell.supported) {
    r.status = RecordStatus::unsupported;
    return r;
  }

  const auto& cfg = model_named(plan, cell.model);
  ContextSlice slice = context_for(conversation.representation, cell.qtype, r.seed);
  const PromptPackage pkg = build_prompt(slice, cell.format, cell.level);
  r.prompt_digest = sha256_hex(pkg.prompt_text);
  r.generation = gateway.generate(pkg, cfg, mode);
  r.slice = std::move(slice);

  if (r.generation->transport_status != TransportStatus::ok) {
    r.validity = ValidityRecord{false, std::nullopt, FailureCode::no_json};
    r.status = RecordStatus::transport_failed;
    return r;
  }
  auto classified = classify(r.generation->raw_text, cell.format);
  r.validity = classified.validity;
  r.question = std::move(classified.question);
  r.status = r.validity->format_ok.value_or(false) ? RecordStatus::ok : RecordStatus::invalid;
  if (r.question && !judges.empty()) {
    r.ratings = rate_question(*r.question, *r.slice, r.key(), gateway, judges, mode);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Store

RunStore::RunStore(const fs::path& runs_root, std::string_view plan_id)
    : dir_(runs_root / std::string(plan_id)) {
  if (plan_id.empty() || plan_id.find('/') != std::string_view::npos || plan_id == "." ||
      plan_id == "..") {
    throw StoreError("invalid plan id '" + std::string(plan_id) + "'");
  }
}

bool RunStore::has_plan() const { return fs::exists(dir_ / "plan.json"); }

void RunStore::save_plan(const RunPlan& plan) {
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw StoreError("cannot create " + dir_.string() + ": " + ec.message());
  const auto tmp = dir_ / "plan.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << to_json(plan).dump(2) << '\n';
    if (!out) throw StoreError("cannot write " + tmp.string());
  }
  fs::rename(tmp, dir_ / "plan.json", ec);
  if (ec) throw StoreError("cannot write plan.json: " + ec.message());
}

RunPlan RunStore::load_plan() const {
  const auto path = dir_ / "plan.json";
  if (!fs::exists(path)) throw NotFound("no run named '" + dir_.filename().string() + "'");
  const auto text = read_file(path);
  const auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw StoreError("plan.json is not valid JSON");
  return run_plan_from_json(j);
}

void RunStore::repair_tail() {
  truncate_torn_tail(dir_ / "records.jsonl");
  truncate_torn_tail(dir_ / "ratings.jsonl");
  std::ofstream idx(dir_ / "records.idx", std::ios::binary | std::ios::trunc);
  std::size_t offset = 0;
  keys_.clear();
  const auto text = read_file(dir_ / "records.jsonl");
  for (auto line : complete_lines(text)) {
    const auto j = json::parse(line, nullptr, false);
    offset = static_cast<std::size_t>(line.data() - text.data());
    if (j.is_discarded() || !j.contains("key")) {
      throw StoreError("corrupt record at byte " + std::to_string(offset));
    }
    const auto key = j["key"].get<std::string>();
    keys_.insert(key);
    idx << key << '\t' << offset << '\n';
  }
  loaded_ = true;
}

void RunStore::append(const RunRecord& record) {
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw StoreError("cannot create " + dir_.string() + ": " + ec.message());
  if (!loaded_) repair_tail();
  const auto key = record.key();
  if (keys_.contains(key)) throw StoreError("record " + key + " already stored");
  const auto path = dir_ / "records.jsonl";
  const auto offset = fs::exists(path) ? fs::file_size(path) : 0;
  append_line(path, to_json(record).dump());
  append_line(dir_ / "records.idx", key + "\t" + std::to_string(offset));
  keys_.insert(key);
}

void RunStore::append_ratings(std::span<const QualityRating> ratings) {
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (!loaded_) repair_tail();
  for (const auto& r : ratings) append_line(dir_ / "ratings.jsonl", to_json(r).dump());
}

std::set<std::string> RunStore::keys() const {
  std::set<std::string> out;
  for (const auto& r : records()) out.insert(r.key());
  return out;
}

std::vector<RunRecord> RunStore::records() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  const auto text = read_file(dir_ / "records.jsonl");
  for (auto line : complete_lines(text)) {
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw StoreError("corrupt line in records.jsonl");
    out.push_back(run_record_from_json(j));
  }
  return out;
}

std::vector<QualityRating> RunStore::extra_ratings() const {
  std::lock_guard lock(mu_);
  std::vector<QualityRating> out;
  const auto text = read_file(dir_ / "ratings.jsonl");
  for (auto line : complete_lines(text)) {
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw StoreError("corrupt line in ratings.jsonl");
    out.push_back(rating_from_json(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

std::size_t RunSummary::total() const {
  std::size_t n = 0;
  for (const auto& [status, count] : counts) n += count;
  return n;
}

RunSummary execute(const RunPlan& plan, Gateway& gateway, RunStore& store,
                   const ExecuteOptions& options) {
  if (!store.has_plan()) store.save_plan(plan);
  const auto existing = store.keys();

  std::vector<const Cell*> todo;
  for (const auto& cell : plan.cells) {
    if (!existing.contains(cell_key(plan, cell))) todo.push_back(&cell);
  }
  RunSummary summary;
  summary.skipped = plan.cells.size() - todo.size();
  if (options.stop_after && todo.size() > *options.stop_after) todo.resize(*options.stop_after);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (!failed) {
      const auto i = next++;
      if (i >= todo.size()) return;
      try {
        store.append(run_cell(plan, *todo[i], gateway, options.judges));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const auto threads = std::max<std::size_t>(1, std::min(options.parallelism, todo.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
  summary.executed = todo.size();

  for (const auto& r : store.records()) ++summary.counts[r.status];
  return summary;
}

}  // namespace labqg
