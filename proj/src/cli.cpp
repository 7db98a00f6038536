#include "testsched/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "testsched/config.hpp"
#include "testsched/domain.hpp"
#include "testsched/errors.hpp"
#include "testsched/execution.hpp"
#include "testsched/io.hpp"
#include "testsched/reporting.hpp"
#include "testsched/scheduler.hpp"
#include "testsched/simulator.hpp"

namespace testsched {

using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> time_budget_ms;
  std::optional<int> cycles;
  std::string scheduler;

  std::string repo;
  std::string history;
  std::string workload;
  std::string outcome;
  std::string out;
  std::string in;
  std::string format = "csv";
};

void add_config_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--set", o.sets, "Override one setting, section.key=value");
  cmd->add_option("--seed", o.seed, "Replace every configured seed");
  cmd->add_option("--time-budget-ms", o.time_budget_ms, "Solver time budget");
  cmd->add_option("--scheduler", o.scheduler, "greedy or optimal")
      ->check(CLI::IsMember({"greedy", "optimal"}));
}

RunConfig resolve(const Options& o) {
  std::vector<ConfigFlag> flags;
  for (const auto& s : o.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("UnknownKey", "--set expects section.key=value, got '" + s + "'");
    flags.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.time_budget_ms) flags.emplace_back("solver.time_budget_ms", std::to_string(*o.time_budget_ms));
  if (o.cycles) flags.emplace_back("simulation.cycles", std::to_string(*o.cycles));
  if (!o.scheduler.empty()) flags.emplace_back("simulation.scheduler", json(o.scheduler).dump());
  std::optional<std::filesystem::path> file;
  if (!o.config.empty()) file = o.config;
  return parse_config(file, flags, o.seed);
}

Repository load_valid_repository(const std::string& path) {
  auto repo = load_repository(path);
  if (auto v = validate_repository(repo.tests, repo.agents); !v.ok()) {
    throw FormatError("repository '" + path + "' is invalid: " + to_string(v.violations.front().kind) +
                      " '" + v.violations.front().id + "'");
  }
  return repo;
}

json prioritized_json(const std::vector<PrioritizedTest>& prioritized) {
  json list = json::array();
  for (const auto& p : prioritized) list.push_back({{"test_id", p.test.id}, {"priority", p.priority}});
  return list;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  auto repo = load_repository(o.repo);
  auto result = validate_repository(repo.tests, repo.agents);
  if (result.ok()) {
    out << json{{"valid", true}, {"tests", repo.tests.size()}, {"agents", repo.agents.size()}}.dump() << "\n";
    return kExitOk;
  }
  json violations = json::array();
  for (const auto& v : result.violations) violations.push_back({{"kind", to_string(v.kind)}, {"id", v.id}});
  err << json{{"error", "ValidationFailed"}, {"violations", violations}}.dump() << "\n";
  return kExitDomainError;
}

int cmd_prioritize(const Options& o, std::ostream& out) {
  auto config = resolve(o);
  auto repo = load_valid_repository(o.repo);
  auto history = load_history(o.history);
  auto eligible = filter_eligible(repo.tests, repo.agents);
  auto prioritized = prioritize_all(eligible.tests, history, config.priority, history.current_cycle());
  json doc{{"format_version", kFormatVersion}, {"cycle", history.current_cycle()}, {"tests", prioritized_json(prioritized)}};
  if (!o.out.empty()) {
    write_json_file(o.out, doc);
  } else {
    out << doc.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_schedule(const Options& o, std::ostream& out) {
  auto config = resolve(o);
  auto repo = load_valid_repository(o.repo);
  auto history = load_history(o.history);
  const int cycle = history.current_cycle();
  auto eligible = filter_eligible(repo.tests, repo.agents);
  auto prioritized = prioritize_all(eligible.tests, history, config.priority, cycle);

  SchedulingInstance instance;
  instance.prioritized = prioritized;
  instance.agents = eligible.agents;
  instance.pair_last_cycle = history.pair_last_cycle();
  instance.current_cycle = cycle;
  instance.solver_time_budget_ms = config.solver.time_budget_ms;
  instance.node_limit = config.solver.node_limit;
  instance.pair_staleness_cap = config.solver.staleness_cap;
  instance.diversity = config.solver.diversity;
  auto schedule = config.simulation.scheduler == SchedulerKind::Greedy ? schedule_greedy(instance)
                                                                       : schedule_optimal(instance);

  const std::filesystem::path dir = o.out;
  std::vector<std::string> written;
  for (const auto& plan : emit_test_plans(schedule, prioritized, eligible.agents, cycle)) {
    auto path = plan_path(dir, cycle, plan.agent_id);
    write_json_file(path, to_json(plan));
    written.push_back(path.string());
  }
  auto u = utilization(schedule, prioritized, eligible.agents);
  json summary{{"format_version", kFormatVersion},
               {"cycle", cycle},
               {"scheduler", to_string(config.simulation.scheduler)},
               {"assignments", schedule.assignments},
               {"objective",
                {{"total_priority", schedule.objective.total_priority()},
                 {"diversity", schedule.objective.diversity()},
                 {"used_time", schedule.objective.used_time()}}},
               {"overall_utilization", u.overall},
               {"per_agent_utilization", u.per_agent},
               {"solver", {{"nodes", schedule.stats.nodes}, {"complete", schedule.stats.complete}}},
               {"plans", written}};
  write_json_file(dir / ("cycle_" + std::to_string(cycle)) / "schedule.json", summary);
  out << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  auto config = resolve(o);
  Repository repo;
  HistoryStore history;
  OutcomeModel outcome = outcome_model_for(config);
  if (!o.workload.empty() || o.repo.empty()) {
    WorkloadSpec spec = config.workload;
    if (!o.workload.empty()) {
      spec = workload_spec_from_json(read_json_file(o.workload));
      if (o.seed) spec.seed = *o.seed;
    }
    auto workload = generate_workload(spec);
    repo = std::move(workload.repo);
    outcome = std::move(workload.outcome);
  } else {
    repo = load_valid_repository(o.repo);
    if (!o.history.empty()) history = load_history(o.history);
    if (!o.outcome.empty()) {
      outcome = outcome_model_from_json(read_json_file(o.outcome));
      if (o.seed) outcome.seed = *o.seed;
    }
  }
  auto sim = simulation_config_for(config, std::move(outcome), o.out);
  auto reports = run_simulation(sim, std::move(repo), std::move(history));
  auto summary = campaign_summary(reports);
  write_json_file(std::filesystem::path(o.out) / "summary.json", to_json(summary));
  out << to_json(summary).dump(2) << "\n";
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  auto reports = load_reports(o.in);
  auto summary = campaign_summary(reports);
  json files = json::array();
  if (o.format == "csv") {
    for (const auto& p : export_plot_data(reports, o.out)) files.push_back(p.string());
  } else {
    files.push_back(export_plot_json(reports, o.out).string());
  }
  auto summary_path = std::filesystem::path(o.out) / "summary.json";
  write_json_file(summary_path, to_json(summary));
  files.push_back(summary_path.string());
  out << json{{"summary", to_json(summary)}, {"files", files}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  auto config = resolve(o);
  WorkloadSpec spec = config.workload;
  if (!o.workload.empty()) {
    spec = workload_spec_from_json(read_json_file(o.workload));
    if (o.seed) spec.seed = *o.seed;
  }
  auto workload = generate_workload(spec);
  const std::filesystem::path dir = o.out;
  save_repository(workload.repo, dir / "repo.json");
  write_json_file(dir / "outcome_model.json", to_json(workload.outcome));
  out << json{{"repository", (dir / "repo.json").string()},
              {"outcome_model", (dir / "outcome_model.json").string()},
              {"tests", workload.repo.tests.size()},
              {"agents", workload.repo.agents.size()}}
             .dump(2)
      << "\n";
  return kExitOk;
}

json error_json(const Error& e) {
  json j{{"error", e.code()}, {"message", e.what()}};
  if (const auto* inf = dynamic_cast<const InfeasibleError*>(&e)) j["tests"] = inf->test_ids();
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Test execution scheduling and CI-cycle simulation", "testsched"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a repository file");
  validate->add_option("--repo", o.repo, "Repository JSON")->required();

  auto* prioritize = app.add_subcommand("prioritize", "Print priorities for the next cycle");
  prioritize->add_option("--repo", o.repo, "Repository JSON")->required();
  prioritize->add_option("--history", o.history, "History log (JSON lines)")->required();
  prioritize->add_option("--out", o.out, "Write the list here instead of stdout");
  add_config_options(prioritize, o);

  auto* schedule = app.add_subcommand("schedule", "Schedule the next cycle and write test plans");
  schedule->add_option("--repo", o.repo, "Repository JSON")->required();
  schedule->add_option("--history", o.history, "History log (JSON lines)")->required();
  schedule->add_option("--out", o.out, "Output directory")->required();
  add_config_options(schedule, o);

  auto* simulate = app.add_subcommand("simulate", "Run a multi-cycle simulation");
  auto* workload_opt = simulate->add_option("--workload", o.workload, "Workload spec JSON");
  auto* repo_opt = simulate->add_option("--repo", o.repo, "Repository JSON");
  simulate->add_option("--history", o.history, "Initial history log")->needs(repo_opt);
  simulate->add_option("--outcome", o.outcome, "Outcome model JSON")->needs(repo_opt);
  workload_opt->excludes(repo_opt);
  simulate->add_option("--out", o.out, "Output directory")->required();
  simulate->add_option("--cycles", o.cycles, "Number of CI cycles");
  add_config_options(simulate, o);

  auto* report = app.add_subcommand("report", "Summarize a simulation and export plot data");
  report->add_option("--in", o.in, "Simulation output directory")->required();
  report->add_option("--out", o.out, "Export directory")->required();
  report->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* generate = app.add_subcommand("generate-workload", "Write a synthetic repository");
  generate->add_option("--workload", o.workload, "Workload spec JSON");
  generate->add_option("--out", o.out, "Output directory")->required();
  add_config_options(generate, o);

  std::vector<const char*> argv{"testsched"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out, err);
    if (prioritize->parsed()) return cmd_prioritize(o, out);
    if (schedule->parsed()) return cmd_schedule(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (report->parsed()) return cmd_report(o, out);
    if (generate->parsed()) return cmd_generate(o, out);
  } catch (const ConfigError& e) {
    err << error_json(e).dump() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << error_json(e).dump() << "\n";
    return kExitDomainError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << json{{"error", "IoError"}, {"message", e.what()}}.dump() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace testsched
