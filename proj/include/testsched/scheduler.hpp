#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "testsched/domain.hpp"
#include "testsched/prioritizer.hpp"

namespace testsched {

using PairKey = std::pair<std::string, std::string>;  // (test_id, agent_id)
using PairHistory = std::map<PairKey, int>;

/// Priorities are packed as integer nano-units and durations as integer
/// milliseconds so objective sums are exact and order independent.
inline constexpr double kPriorityScale = 1e9;

std::int64_t priority_units(double priority);
std::int64_t duration_ms(double seconds);
std::int64_t budget_ms(double seconds);

struct SchedulingInstance {
  std::vector<PrioritizedTest> prioritized;
  std::vector<TestAgent> agents;
  PairHistory pair_last_cycle;
  int current_cycle = 0;
  int solver_time_budget_ms = 2000;
  /// Search nodes before the solver stops; 0 means no limit. Unlike the
  /// wall-clock budget this limit is reproducible.
  std::int64_t node_limit = 0;
  int pair_staleness_cap = 8;
  bool diversity = true;
};

/// Compared lexicographically on (total priority, diversity, used time).
struct ObjectiveVector {
  std::int64_t priority_units = 0;
  std::int64_t diversity_units = 0;  // sum of capped pair gaps, in cycles
  std::int64_t used_ms = 0;
  int staleness_cap = 8;

  double total_priority() const { return static_cast<double>(priority_units) / kPriorityScale; }
  double diversity() const {
    return static_cast<double>(diversity_units) / static_cast<double>(staleness_cap);
  }
  double used_time() const { return static_cast<double>(used_ms) / 1000.0; }

  std::strong_ordering operator<=>(const ObjectiveVector& other) const {
    if (auto c = priority_units <=> other.priority_units; c != 0) return c;
    if (auto c = diversity_units <=> other.diversity_units; c != 0) return c;
    return used_ms <=> other.used_ms;
  }
  bool operator==(const ObjectiveVector& other) const { return (*this <=> other) == 0; }
};

struct SolveStats {
  std::int64_t nodes = 0;
  bool complete = true;  // search finished before any limit
  double wall_ms = 0.0;
};

struct Schedule {
  /// agent id -> test ids by descending priority. Agents without work are absent.
  std::map<std::string, std::vector<std::string>> assignments;
  ObjectiveVector objective;
  SolveStats stats;

  std::size_t test_count() const;
  /// Sorted (test_id, agent_id) pairs; the final tie-break between equal objectives.
  std::vector<PairKey> sorted_pairs() const;

  friend bool operator==(const Schedule& a, const Schedule& b) {
    return a.assignments == b.assignments && a.objective == b.objective;
  }
};

double pair_staleness(const std::string& test_id, const std::string& agent_id,
                      const PairHistory& pair_last_cycle, int current_cycle, int cap);

/// Scores an assignment map under the instance's objective.
ObjectiveVector evaluate(const SchedulingInstance& instance,
                         const std::map<std::string, std::vector<std::string>>& assignments);

/// Budget, uniqueness and compatibility violations; empty when feasible.
std::vector<std::string> check_schedule(const Schedule& schedule,
                                        const SchedulingInstance& instance);
std::vector<std::string> missing_obligatory(const Schedule& schedule,
                                            const SchedulingInstance& instance);

/// First-fill baseline: each agent in turn takes every remaining compatible
/// test, in priority order, that still fits. Ignores the obligatory flag.
Schedule schedule_greedy(const SchedulingInstance& instance);

/// Anytime branch and bound over the lexicographic objective. Obligatory
/// tests are hard constraints. Throws InfeasibleError.
Schedule schedule_optimal(const SchedulingInstance& instance);

inline constexpr std::size_t kOracleMaxTests = 12;
inline constexpr std::size_t kOracleMaxAgents = 3;

/// Exhaustive enumeration with the same objective and tie-break as
/// schedule_optimal. Throws InstanceTooLargeError or InfeasibleError.
Schedule schedule_oracle(const SchedulingInstance& instance);

}  // namespace testsched
