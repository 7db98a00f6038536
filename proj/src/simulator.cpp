#include "testsched/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_map>

#include "testsched/errors.hpp"
#include "testsched/io.hpp"
#include "testsched/scheduler.hpp"

namespace testsched {

const char* to_string(SchedulerKind kind) {
  return kind == SchedulerKind::Greedy ? "greedy" : "optimal";
}

SchedulerKind scheduler_kind_from_string(const std::string& text) {
  if (text == "greedy") return SchedulerKind::Greedy;
  if (text == "optimal") return SchedulerKind::Optimal;
  throw FormatError("unknown scheduler '" + text + "' (expected greedy or optimal)");
}

std::string SimulationConfig::check() const {
  if (cycles < 1) return "cycles must be at least 1";
  if (auto p = weights.check(); !p.empty()) return p;
  if (auto p = outcome.check(); !p.empty()) return p;
  if (solver.time_budget_ms < 1) return "time_budget_ms must be positive";
  if (solver.staleness_cap < 1) return "solver staleness_cap must be at least 1";
  if (solver.node_limit < 0) return "node_limit must be non-negative";
  return {};
}

std::string WorkloadSpec::check() const {
  if (test_count < 0 || agent_count < 0) return "workload counts must be non-negative";
  if (test_count > 0 && agent_count < 1) return "tests need at least one agent";
  if (!(min_duration > 0.0 && min_duration <= max_duration)) return "duration bounds need 0 < min <= max";
  if (!(compatibility_density > 0.0 && compatibility_density <= 1.0)) return "compatibility density must lie in (0, 1]";
  if (!(obligatory_fraction >= 0.0 && obligatory_fraction <= 1.0)) return "obligatory fraction must lie in [0, 1]";
  if (!(min_defect_probability >= 0.0 && min_defect_probability <= max_defect_probability &&
        max_defect_probability <= 1.0)) {
    return "defect probability bounds need 0 <= min <= max <= 1";
  }
  if (!(budget > 0.0)) return "agent budget must be positive";
  if (!(jitter_lo > 0.0 && jitter_lo <= jitter_hi)) return "duration jitter needs 0 < lo <= hi";
  return {};
}

namespace {

class Draws {
 public:
  explicit Draws(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(unit() * n); }

 private:
  std::mt19937_64 engine_;
};

double round_to(double v, double step) { return std::round(v / step) * step; }

std::string padded(char prefix, int i, int count) {
  const auto width = std::to_string(std::max(count - 1, 0)).size();
  auto digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

Workload generate_workload(const WorkloadSpec& spec) {
  if (auto problem = spec.check(); !problem.empty()) throw FormatError("invalid workload: " + problem);
  Draws draws(spec.seed);
  Workload w;
  w.outcome.seed = spec.seed;
  w.outcome.jitter_lo = spec.jitter_lo;
  w.outcome.jitter_hi = spec.jitter_hi;

  for (int a = 0; a < spec.agent_count; ++a) {
    w.repo.agents.push_back({padded('a', a, spec.agent_count), spec.budget, {"robot"}, true});
  }
  for (int i = 0; i < spec.test_count; ++i) {
    TestCase t;
    t.id = padded('t', i, spec.test_count);
    t.avg_duration = std::max(0.001, round_to(draws.uniform(spec.min_duration, spec.max_duration), 0.001));
    t.static_priority = round_to(draws.unit(), 0.001);
    for (const auto& agent : w.repo.agents) {
      if (draws.unit() < spec.compatibility_density) t.compatible_agents.insert(agent.id);
    }
    if (t.compatible_agents.empty()) {
      t.compatible_agents.insert(w.repo.agents[draws.below(w.repo.agents.size())].id);
    }
    w.outcome.defect_probability[t.id] =
        round_to(draws.uniform(spec.min_defect_probability, spec.max_defect_probability), 0.0001);
    w.repo.tests.push_back(std::move(t));
  }

  // Obligatory candidates in shuffled order; each is kept only if a
  // first-fit witness placement still has room for it.
  std::vector<std::size_t> order(w.repo.tests.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draws.below(i)]);
  const auto wanted = static_cast<std::size_t>(std::llround(spec.obligatory_fraction * spec.test_count));
  std::unordered_map<std::string, std::int64_t> residual;
  for (const auto& a : w.repo.agents) residual[a.id] = budget_ms(a.budget);
  std::size_t chosen = 0;
  for (std::size_t idx : order) {
    if (chosen == wanted) break;
    auto& t = w.repo.tests[idx];
    const auto d = duration_ms(t.avg_duration);
    for (const auto& agent_id : t.compatible_agents) {
      if (residual[agent_id] >= d) {
        residual[agent_id] -= d;
        t.obligatory = true;
        ++chosen;
        break;
      }
    }
  }
  return w;
}

namespace {

class StageLog {
 public:
  StageLog(const StageObserver& observer, int cycle) : observer_(observer), cycle_(cycle) {}
  void operator()(std::string_view stage) const {
    if (observer_) observer_(cycle_, stage);
  }

 private:
  const StageObserver& observer_;
  int cycle_;
};

// Agents only see serialized plans and the controller only sees serialized
// results, through files when an output directory is configured.
TestPlan deliver_plan(const TestPlan& plan, const std::filesystem::path& out) {
  auto text = to_json(plan).dump(2) + "\n";
  if (out.empty()) return test_plan_from_json(nlohmann::json::parse(text));
  auto path = plan_path(out, plan.cycle, plan.agent_id);
  write_text_file(path, text);
  return test_plan_from_json(read_json_file(path));
}

AgentResult return_result(const AgentResult& result, const std::filesystem::path& out) {
  auto text = to_json(result).dump(2) + "\n";
  if (out.empty()) return agent_result_from_json(nlohmann::json::parse(text));
  auto path = result_path(out, result.cycle, result.agent_id);
  write_text_file(path, text);
  return agent_result_from_json(read_json_file(path));
}

}  // namespace

CycleReport run_cycle(SimulationState& state, const StageObserver& observer) {
  const auto& config = state.config;
  const int cycle = state.history.current_cycle();
  StageLog stage(observer, cycle);

  stage("filter");
  auto eligible = filter_eligible(state.repo.tests, state.repo.agents);

  stage("prioritize");
  auto prioritized = prioritize_all(eligible.tests, state.history, config.weights, cycle);

  stage("schedule");
  SchedulingInstance instance;
  instance.prioritized = prioritized;
  instance.agents = eligible.agents;
  instance.pair_last_cycle = state.history.pair_last_cycle();
  instance.current_cycle = cycle;
  instance.solver_time_budget_ms = config.solver.time_budget_ms;
  instance.node_limit = config.solver.node_limit;
  instance.pair_staleness_cap = config.solver.staleness_cap;
  instance.diversity = config.solver.diversity;

  const auto started = std::chrono::steady_clock::now();
  Schedule schedule = config.scheduler == SchedulerKind::Greedy ? schedule_greedy(instance)
                                                                : schedule_optimal(instance);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  if (auto problems = check_schedule(schedule, instance); !problems.empty()) {
    throw Error("InternalError", "scheduler produced an infeasible schedule: " + problems.front());
  }

  stage("emit");
  auto plans = emit_test_plans(schedule, prioritized, eligible.agents, cycle);

  stage("execute");
  std::vector<AgentResult> results;
  for (const auto& plan : plans) {
    auto received = deliver_plan(plan, config.out_dir);
    results.push_back(return_result(execute_plan(received, config.outcome), config.out_dir));
  }

  stage("collect");
  collect_results(results, state.history);

  stage("report");
  CycleReport report;
  report.cycle = cycle;
  report.scheduler = to_string(config.scheduler);
  auto u = utilization(schedule, prioritized, eligible.agents);
  report.per_agent_utilization = u.per_agent;
  report.overall_utilization = u.overall;
  report.eligible_count = static_cast<int>(eligible.tests.size());
  report.ineligible_count = static_cast<int>(state.repo.tests.size() - eligible.tests.size());
  report.scheduled_count = static_cast<int>(schedule.test_count());
  report.dropped_tests = report.eligible_count - report.scheduled_count;
  report.priority_histogram = priority_histogram(prioritized);
  report.total_priority = schedule.objective.total_priority();
  report.diversity = schedule.objective.diversity();
  report.used_time = schedule.objective.used_time();
  report.solver_nodes = schedule.stats.nodes;
  report.solver_complete = schedule.stats.complete;
  report.solver_wall_time_ms = wall_ms;

  double actual_total = 0.0;
  double budget_total = 0.0;
  for (const auto& a : eligible.agents) budget_total += a.budget;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    AgentTimeline line{plans[k].agent_id, plans[k].budget, {}};
    double start = 0.0;
    double actual_sum = 0.0;
    for (std::size_t e = 0; e < plans[k].entries.size(); ++e) {
      const auto& entry = plans[k].entries[e];
      const auto& record = results[k].records[e];
      line.entries.push_back({entry.test_id, start, entry.planned_duration, record.actual_duration,
                              record.outcome == Outcome::Fail});
      start += entry.planned_duration;
      actual_sum += record.actual_duration;
      ++report.executed_count;
      if (record.outcome == Outcome::Fail) ++report.fail_count;
    }
    if (actual_sum > plans[k].budget) ++report.overrun_agents;
    actual_total += actual_sum;
    report.timeline.push_back(std::move(line));
  }
  report.actual_utilization = budget_total > 0.0 ? actual_total / budget_total : 0.0;
  return report;
}

namespace {

[[noreturn]] void rethrow_with_cycle(int cycle) {
  const std::string prefix = "cycle " + std::to_string(cycle) + ": ";
  try {
    throw;
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(e.test_ids(), prefix + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), prefix + e.what());
  }
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to '" + path.string() + "'");
  out << line << "\n";
}

}  // namespace

std::vector<CycleReport> run_simulation(const SimulationConfig& config, Repository repo,
                                        HistoryStore history, const StageObserver& observer) {
  if (auto problem = config.check(); !problem.empty()) throw FormatError("invalid simulation config: " + problem);
  if (auto v = validate_repository(repo.tests, repo.agents); !v.ok()) {
    throw FormatError(std::string("invalid repository: ") + to_string(v.violations.front().kind) +
                      " '" + v.violations.front().id + "'");
  }

  const auto& out = config.out_dir;
  const auto history_file = out / "history.jsonl";
  const auto log_file = out / "pipeline.log";
  const auto timing_file = out / "timing.jsonl";
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    save_history(history, history_file);
    write_text_file(log_file, "");
    write_text_file(timing_file, "");
  }

  StageObserver logging = [&](int cycle, std::string_view stage) {
    if (!out.empty()) append_line(log_file, "cycle " + std::to_string(cycle) + " " + std::string(stage));
    if (observer) observer(cycle, stage);
  };

  SimulationState state{std::move(repo), std::move(history), config};
  std::vector<CycleReport> reports;
  for (int i = 0; i < config.cycles; ++i) {
    const int cycle = state.history.current_cycle();
    CycleReport report;
    try {
      report = run_cycle(state, logging);
    } catch (const Error&) {
      rethrow_with_cycle(cycle);
    }
    if (!out.empty()) {
      append_history_cycle(state.history, cycle, history_file);
      write_json_file(report_path(out, cycle), to_json(report));
      char timing[160];
      std::snprintf(timing, sizeof timing,
                    R"({"cycle":%d,"solver_wall_time_ms":%.3f,"nodes":%lld,"complete":%s})", cycle,
                    report.solver_wall_time_ms, static_cast<long long>(report.solver_nodes),
                    report.solver_complete ? "true" : "false");
      append_line(timing_file, timing);
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace testsched
