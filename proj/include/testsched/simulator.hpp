#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "testsched/domain.hpp"
#include "testsched/execution.hpp"
#include "testsched/prioritizer.hpp"
#include "testsched/reporting.hpp"

namespace testsched {

enum class SchedulerKind { Greedy, Optimal };

const char* to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(const std::string& text);

struct SolverSettings {
  int time_budget_ms = 2000;
  int staleness_cap = 8;
  bool diversity = true;
  /// Reproducible work limit; 0 disables it and leaves only the clock.
  std::int64_t node_limit = 200000;
};

struct SimulationConfig {
  int cycles = 87;
  SchedulerKind scheduler = SchedulerKind::Optimal;
  PriorityWeights weights;
  OutcomeModel outcome;
  SolverSettings solver;
  /// Plans, results, reports and history go here. Empty keeps everything in
  /// memory; plans and results still pass through their JSON form.
  std::filesystem::path out_dir;

  std::string check() const;
};

struct WorkloadSpec {
  int test_count = 400;
  int agent_count = 4;
  double min_duration = 60.0;
  double max_duration = 180.0;
  double compatibility_density = 0.9;
  double obligatory_fraction = 0.02;
  double min_defect_probability = 0.0;
  double max_defect_probability = 0.3;
  double budget = 3600.0;
  double jitter_lo = 0.9;
  double jitter_hi = 1.1;
  std::uint64_t seed = 1;

  std::string check() const;
};

struct Workload {
  Repository repo;
  OutcomeModel outcome;
};

/// Deterministic in the seed. Every test gets at least one compatible agent
/// and the obligatory tests always admit a feasible placement.
Workload generate_workload(const WorkloadSpec& spec);

struct SimulationState {
  Repository repo;
  HistoryStore history;
  SimulationConfig config;
};

/// Called with (cycle, stage) as each pipeline stage starts.
using StageObserver = std::function<void(int, std::string_view)>;

/// filter -> prioritize -> schedule -> emit -> execute -> collect -> report.
/// On InfeasibleError the history is untouched.
CycleReport run_cycle(SimulationState& state, const StageObserver& observer = {});

/// Runs config.cycles cycles. With an output directory, history.jsonl,
/// per-cycle report.json, pipeline.log and timing.jsonl are written as the
/// run progresses. Errors carry the failing cycle index in their message.
std::vector<CycleReport> run_simulation(const SimulationConfig& config, Repository repo,
                                        HistoryStore history = {},
                                        const StageObserver& observer = {});

}  // namespace testsched
