#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "testsched/domain.hpp"
#include "testsched/prioritizer.hpp"
#include "testsched/scheduler.hpp"

namespace testsched {

struct PlanEntry {
  std::string test_id;
  double planned_duration = 0.0;
  double priority = 0.0;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// One agent's slice of a cycle's schedule, ordered by descending priority.
struct TestPlan {
  std::string agent_id;
  int cycle = 0;
  double budget = 0.0;
  std::vector<PlanEntry> entries;

  double planned_total() const;

  friend bool operator==(const TestPlan&, const TestPlan&) = default;
};

struct AgentResult {
  std::string agent_id;
  int cycle = 0;
  std::vector<ExecutionRecord> records;
  std::vector<std::string> log_lines;

  friend bool operator==(const AgentResult&, const AgentResult&) = default;
};

/// Stochastic stand-in for real hardware.
struct OutcomeModel {
  std::map<std::string, double> defect_probability;
  double default_defect_probability = 0.0;
  double jitter_lo = 1.0;
  double jitter_hi = 1.0;
  std::uint64_t seed = 0;

  double probability_for(const std::string& test_id) const;
  /// Empty when valid.
  std::string check() const;
};

std::vector<TestPlan> emit_test_plans(const Schedule& schedule,
                                      std::span<const PrioritizedTest> prioritized,
                                      std::span<const TestAgent> agents, int cycle);

nlohmann::json to_json(const TestPlan& plan);
TestPlan test_plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgentResult& result);
AgentResult agent_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OutcomeModel& model);
OutcomeModel outcome_model_from_json(const nlohmann::json& j);

std::filesystem::path plan_path(const std::filesystem::path& out, int cycle, const std::string& agent_id);
std::filesystem::path result_path(const std::filesystem::path& out, int cycle, const std::string& agent_id);

/// Stream seed for one test execution; depends only on its arguments.
std::uint64_t execution_seed(std::uint64_t seed, const std::string& agent_id, int cycle,
                             const std::string& test_id);

AgentResult execute_plan(const TestPlan& plan, const OutcomeModel& model);

/// Appends every record and advances the cycle. All-or-nothing: on
/// DuplicateRecordError or a cycle mismatch the history is left untouched.
void collect_results(std::span<const AgentResult> results, HistoryStore& history);

}  // namespace testsched
