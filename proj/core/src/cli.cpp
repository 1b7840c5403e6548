#include "labqg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "labqg/app.hpp"
#include "labqg/fixtures.hpp"
#include "labqg/service.hpp"

namespace labqg {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool is_count(const std::string& text) {
  return !text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

// "4" means L1..L4; "L2,L4" names levels.
std::vector<TelerLevel> levels_from(const std::string& spec, const AppConfig& cfg) {
  if (spec.empty()) return cfg.default_levels;
  if (is_count(spec)) {
    const auto n = std::stoul(spec);
    if (n < 1 || n > 4) throw UsageError("--levels count must be 1-4");
    return {kAllTelerLevels.begin(), kAllTelerLevels.begin() + n};
  }
  std::vector<TelerLevel> out;
  for (const auto& name : split_list(spec)) {
    const auto level = parse_teler_level(name);
    if (!level) throw UsageError("unknown level '" + name + "'");
    out.push_back(*level);
  }
  return out;
}

// "2" means the first two registry entries; otherwise a list of names.
std::vector<ModelConfig> models_from(const std::string& spec, const AppConfig& cfg) {
  if (spec.empty()) return {cfg.models.front()};
  if (is_count(spec)) {
    const auto n = std::stoul(spec);
    if (n < 1) throw UsageError("--models count must be at least 1");
    if (n > cfg.models.size()) {
      throw ConfigError("only " + std::to_string(cfg.models.size()) + " models are configured");
    }
    return {cfg.models.begin(), cfg.models.begin() + static_cast<std::ptrdiff_t>(n)};
  }
  std::vector<ModelConfig> out;
  for (const auto& name : split_list(spec)) out.push_back(find_model(cfg, name));
  return out;
}

std::vector<ModelConfig> judges_from(const std::string& spec, const AppConfig& cfg) {
  if (spec.empty()) return cfg.judges;
  std::vector<ModelConfig> out;
  for (const auto& name : split_list(spec)) out.push_back(find_judge(cfg, name));
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  auto j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw FormatError(path + " is not valid JSON");
  return j;
}

template <class T, class Parse>
T enum_arg(const std::string& value, const char* what, Parse parse) {
  const auto parsed = parse(value);
  if (!parsed) throw UsageError(std::string("unknown ") + what + " '" + value + "'");
  return *parsed;
}

void print_summary(std::ostream& out, const RunPlan& plan, const RunSummary& summary,
                   const std::filesystem::path& dir) {
  out << "plan: " << plan.plan_id << "\n"
      << "cells: " << plan.cells.size() << "\n"
      << "executed: " << summary.executed << "\n"
      << "skipped: " << summary.skipped << "\n";
  for (auto s : {RecordStatus::ok, RecordStatus::invalid, RecordStatus::transport_failed,
                 RecordStatus::unsupported}) {
    const auto it = summary.counts.find(s);
    out << to_string(s) << ": " << (it == summary.counts.end() ? 0 : it->second) << "\n";
  }
  out << "records: " << (dir / "records.jsonl").string() << "\n";
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                 std::shared_ptr<ChatTransport> transport) {
  CLI::App cli{"Question generation engine and benchmark harness for virtual labs", "labqg"};
  cli.require_subcommand(1);
  cli.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  std::string store_override;
  cli.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  cli.add_option("--store", store_override, "Workspace directory (overrides the config)");

  std::function<int(App&)> action;

  // sim ---------------------------------------------------------------------
  auto* sim = cli.add_subcommand("sim", "Simulation representations")->require_subcommand(1);
  std::string sim_file, sim_id, out_file;
  auto* sim_validate = sim->add_subcommand("validate", "Check a representation file");
  sim_validate->add_option("file", sim_file, "Representation JSON")->required();
  sim_validate->callback([&] {
    action = [&](App&) {
      const auto s = representation_from_json(read_json_file(sim_file), ParseMode::lenient);
      const auto report = validate_representation(s);
      if (report.empty()) {
        out << "valid\n";
        return 0;
      }
      for (const auto& v : report) {
        err << v.code << (v.element_id.empty() ? "" : " [" + v.element_id + "]") << ": "
            << v.message << "\n";
      }
      return 1;
    };
  });
  auto* sim_import = sim->add_subcommand("import", "Store a representation in the workspace");
  sim_import->add_option("file", sim_file, "Representation JSON")->required();
  sim_import->callback([&] {
    action = [&](App& app) {
      const auto s = representation_from_json(read_json_file(sim_file), ParseMode::lenient);
      app.put_representation(s.sim_id, s);
      out << "imported " << s.sim_id << "\n";
      return 0;
    };
  });
  auto* sim_export = sim->add_subcommand("export", "Print a stored representation");
  sim_export->add_option("id", sim_id, "Simulation id")->required();
  sim_export->add_option("--out", out_file, "Write to this file instead of stdout");
  sim_export->callback([&] {
    action = [&](App& app) {
      const auto text = to_json(app.representation(sim_id)).dump(2) + "\n";
      if (out_file.empty()) {
        out << text;
      } else {
        std::ofstream f(out_file);
        f << text;
        if (!f) throw StoreError("cannot write " + out_file);
      }
      return 0;
    };
  });

  // dialogue ----------------------------------------------------------------
  auto* dialogue =
      cli.add_subcommand("dialogue", "Guided goal dialogue")->require_subcommand(1);
  std::string session_id, title, answer_text, model_name, edits_file;
  bool skip = false;
  auto* d_start = dialogue->add_subcommand("start", "Open a session for a simulation");
  d_start->add_option("--sim", sim_id, "Simulation id")->required();
  d_start->add_option("--title", title, "Simulation title");
  d_start->add_option("--session", session_id, "Session id (generated when omitted)");
  d_start->callback([&] {
    action = [&](App& app) {
      const auto doc = app.start_session(sim_id, title, session_id);
      out << "session: " << doc["session"]["session_id"].get<std::string>() << "\n"
          << "prompt: " << doc["current_prompt"].get<std::string>() << "\n";
      return 0;
    };
  });
  auto* d_answer = dialogue->add_subcommand("answer", "Answer the pending prompt");
  d_answer->add_option("session", session_id, "Session id")->required();
  auto* answer_opt = d_answer->add_option("text", answer_text, "Answer text");
  auto* skip_opt = d_answer->add_flag("--skip", skip, "Skip the pending prompt");
  answer_opt->excludes(skip_opt);
  d_answer->callback([&] {
    if (!skip && answer_text.empty()) throw CLI::ValidationError("give an answer or --skip");
    action = [&](App& app) {
      const auto doc =
          app.answer(session_id, skip ? std::nullopt : std::optional<std::string>(answer_text));
      if (doc["current_prompt"].is_null()) {
        out << "no pending prompt; run `dialogue extract " << session_id << "`\n";
      } else {
        out << "prompt: " << doc["current_prompt"].get<std::string>() << "\n";
      }
      return 0;
    };
  });
  auto* d_show = dialogue->add_subcommand("show", "Print a session");
  d_show->add_option("session", session_id, "Session id")->required();
  d_show->callback([&] {
    action = [&](App& app) {
      out << app.session_view(session_id).dump(2) << "\n";
      return 0;
    };
  });
  auto* d_extract = dialogue->add_subcommand("extract", "Draft a representation from a session");
  d_extract->add_option("session", session_id, "Session id")->required();
  d_extract->add_option("--model", model_name, "Model name from the registry");
  d_extract->callback([&] {
    action = [&](App& app) {
      const auto doc = app.extract(session_id, model_name.empty()
                                                   ? std::nullopt
                                                   : std::optional<std::string>(model_name));
      out << doc["draft"].dump(2) << "\n";
      return 0;
    };
  });
  auto* d_commit = dialogue->add_subcommand("commit", "Apply edits and commit the draft");
  d_commit->add_option("session", session_id, "Session id")->required();
  d_commit->add_option("--edits", edits_file, "JSON array of edits")->check(CLI::ExistingFile);
  d_commit->add_option("--sim", sim_id, "Simulation id (defaults to the session's)");
  d_commit->callback([&] {
    action = [&](App& app) {
      std::vector<TeacherEdit> edits;
      if (!edits_file.empty()) {
        const auto j = read_json_file(edits_file);
        if (!j.is_array()) throw FormatError("edits file must hold a JSON array");
        for (const auto& e : j) edits.push_back(edit_from_json(e));
      }
      const auto target =
          sim_id.empty() ? app.workspace().get_session(session_id).sim_ref : sim_id;
      out << app.commit(target, session_id, edits).dump(2) << "\n";
      return 0;
    };
  });

  // generate ----------------------------------------------------------------
  auto* generate = cli.add_subcommand("generate", "Generate one question for a stored sim");
  std::string qtype_name, format_name, level_name;
  generate->add_option("--sim", sim_id, "Simulation id")->required();
  generate->add_option("--qtype", qtype_name, "Question type")->required();
  generate->add_option("--format", format_name, "Question format")->required();
  generate->add_option("--level", level_name, "TELeR level (L1-L4)")->default_val("L4");
  generate->add_option("--model", model_name, "Model name from the registry");
  generate->callback([&] {
    action = [&](App& app) {
      const auto doc = app.generate(
          sim_id, enum_arg<QuestionType>(qtype_name, "question type", parse_question_type),
          enum_arg<QuestionFormat>(format_name, "format", parse_question_format),
          enum_arg<TelerLevel>(level_name, "level", parse_teler_level),
          model_name.empty() ? std::nullopt : std::optional<std::string>(model_name));
      out << doc.dump(2) << "\n";
      if (doc["record"]["status"] == "transport_failed") {
        err << "GatewayError: " << doc["record"]["generation"]["error_detail"].get<std::string>()
            << "\n";
        return 1;
      }
      return 0;
    };
  });

  // bench -------------------------------------------------------------------
  auto* bench = cli.add_subcommand("bench", "Benchmark matrix runs")->require_subcommand(1);
  std::size_t n_conversations = 8;
  std::string levels_spec, models_spec, judges_spec, plan_id, report_format = "markdown";
  std::size_t parallelism = 0;
  std::optional<std::size_t> stop_after;
  bool judge = false;
  auto add_matrix_options = [&](CLI::App* sub) {
    sub->add_option("--conversations", n_conversations, "Number of fixture conversations (1-8)")
        ->check(CLI::Range(1, 8));
    sub->add_option("--levels", levels_spec, "Level count (e.g. 4) or list (e.g. L1,L3)");
    sub->add_option("--models", models_spec, "Model count or comma-separated names");
  };
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--parallelism", parallelism, "Cells in flight (defaults to the config)");
    sub->add_flag("--judge", judge, "Rate every valid question with the judge panel");
    sub->add_option("--judges", judges_spec, "Comma-separated judge names (implies --judge)");
    sub->add_option("--stop-after", stop_after, "Stop after this many new cells")
        ->group("");
  };
  auto make = [&](const AppConfig& cfg) {
    return make_plan(fixture_plan_conversations(n_conversations), models_from(models_spec, cfg),
                     levels_from(levels_spec, cfg), plan_id);
  };
  auto options_for = [&](const AppConfig& cfg) {
    ExecuteOptions o;
    o.parallelism = parallelism == 0 ? cfg.parallelism : parallelism;
    if (judge || !judges_spec.empty()) o.judges = judges_from(judges_spec, cfg);
    o.stop_after = stop_after;
    return o;
  };

  auto* b_plan = bench->add_subcommand("plan", "Print the size of a benchmark matrix");
  add_matrix_options(b_plan);
  b_plan->add_option("--plan-id", plan_id, "Plan id (derived from the contents when omitted)");
  b_plan->callback([&] {
    action = [&](App& app) {
      const auto plan = make(app.config());
      const auto unsupported = std::count_if(plan.cells.begin(), plan.cells.end(),
                                             [](const Cell& c) { return !c.supported; });
      out << "plan: " << plan.plan_id << "\n"
          << "cells: " << plan.cells.size() << "\n"
          << "unsupported: " << unsupported << "\n";
      return 0;
    };
  });
  auto* b_run = bench->add_subcommand("run", "Run a benchmark matrix and write its report");
  add_matrix_options(b_run);
  add_run_options(b_run);
  b_run->add_option("--plan-id", plan_id, "Plan id (derived from the contents when omitted)");
  b_run->callback([&] {
    action = [&](App& app) {
      const auto plan = make(app.config());
      check_storage_id(plan.plan_id);
      RunStore store(app.workspace().runs_root(), plan.plan_id);
      if (store.has_plan()) {
        throw InvalidState("run " + plan.plan_id + " already exists; use `bench resume`");
      }
      const auto summary = execute(plan, app.gateway(), store, options_for(app.config()));
      print_summary(out, plan, summary, store.dir());
      if (summary.total() == plan.cells.size()) {
        app.run_report(plan.plan_id);
        out << "report: " << (store.dir() / "report.md").string() << "\n";
      }
      return 0;
    };
  });
  auto* b_resume = bench->add_subcommand("resume", "Finish an interrupted run");
  b_resume->add_option("plan", plan_id, "Plan id")->required();
  add_run_options(b_resume);
  b_resume->callback([&] {
    action = [&](App& app) {
      check_storage_id(plan_id);
      RunStore store(app.workspace().runs_root(), plan_id);
      const auto plan = store.load_plan();
      const auto summary = execute(plan, app.gateway(), store, options_for(app.config()));
      print_summary(out, plan, summary, store.dir());
      if (summary.total() == plan.cells.size()) {
        app.run_report(plan.plan_id);
        out << "report: " << (store.dir() / "report.md").string() << "\n";
      }
      return 0;
    };
  });
  auto* b_report = bench->add_subcommand("report", "Render the report of a run");
  b_report->add_option("plan", plan_id, "Plan id")->required();
  b_report->add_option("--format", report_format, "markdown or csv")
      ->check(CLI::IsMember({"markdown", "csv"}));
  b_report->callback([&] {
    action = [&](App& app) {
      out << app.run_report(plan_id, report_format == "csv" ? ReportFormat::csv
                                                            : ReportFormat::markdown);
      return 0;
    };
  });

  // judge -------------------------------------------------------------------
  auto* judge_cmd = cli.add_subcommand("judge", "Rate generated questions")->require_subcommand(1);
  auto* j_run = judge_cmd->add_subcommand("run", "Rate every valid question of a run");
  j_run->add_option("plan", plan_id, "Plan id")->required();
  j_run->add_option("--judges", judges_spec, "Comma-separated judge names (default: all)");
  j_run->callback([&] {
    action = [&](App& app) {
      check_storage_id(plan_id);
      RunStore store(app.workspace().runs_root(), plan_id);
      if (!store.has_plan()) throw NotFound("no run '" + plan_id + "'");
      const auto panel = judges_from(judges_spec, app.config());
      std::set<std::pair<std::string, std::string>> rated;
      for (const auto& r : store.extra_ratings()) rated.insert({r.judge_id, r.question_ref});
      std::size_t added = 0;
      for (const auto& record : store.records()) {
        if (!record.question || !record.slice) continue;
        for (const auto& r : record.ratings) rated.insert({r.judge_id, r.question_ref});
        std::vector<ModelConfig> missing;
        for (const auto& j : panel) {
          if (!rated.contains({j.name, record.key()})) missing.push_back(j);
        }
        if (missing.empty()) continue;
        const auto fresh = rate_question(*record.question, *record.slice, record.key(),
                                         app.gateway(), missing);
        store.append_ratings(fresh);
        added += fresh.size();
      }
      out << "ratings added: " << added << "\n";
      app.run_report(plan_id);
      return 0;
    };
  });

  // serve -------------------------------------------------------------------
  auto* serve = cli.add_subcommand("serve", "Run the HTTP service");
  std::string bind_address;
  int port = -1;
  serve->add_option("--bind", bind_address, "Bind address (default from config)");
  serve->add_option("--port", port, "Port (default from config)")->check(CLI::Range(0, 65535));
  serve->callback([&] {
    action = [&](App& app) {
      Service service(app);
      const auto host = bind_address.empty() ? app.config().bind_address : bind_address;
      const int bound = service.bind(host, port < 0 ? app.config().port : port);
      if (bound < 0) throw ConfigError("cannot bind " + host);
      out << "listening on http://" << host << ":" << bound << std::endl;
      return service.serve() ? 0 : 1;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    AppConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (!store_override.empty()) cfg.store_root = store_override;
    App app(std::move(cfg), std::move(transport));
    return action(app);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << cli.help();
    return 2;
  } catch (const InvalidRepresentation& e) {
    for (const auto& v : e.report()) err << v.code << ": " << v.message << "\n";
    return 1;
  } catch (const Error& e) {
    err << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace labqg
