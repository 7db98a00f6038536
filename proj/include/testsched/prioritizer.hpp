#pragma once

#include <span>
#include <string>
#include <vector>

#include "testsched/domain.hpp"

namespace testsched {

struct PriorityWeights {
  double w_staleness = 0.4;
  double w_duration = 0.2;
  double w_results = 0.4;
  double w_static = 0.5;
  int history_window = 5;   // k most recent results considered
  double decay = 0.5;       // gamma, weight of the j-th newest result is decay^j
  int staleness_cap = 20;   // cycles until staleness saturates
  bool prefer_short = true; // shorter tests score higher on the duration term

  /// Empty when valid, otherwise a description of the first problem.
  std::string check() const;
};

struct PrioritizedTest {
  TestCase test;
  double priority = 0.0;
};

/// min(current - last, cap) / cap, or 1 for a test that never ran.
double staleness(const std::string& test_id, const HistoryStore& history, int current_cycle,
                 int max_staleness_cap);

/// Decay-weighted share of failures among the `window` newest results.
/// Missing results count as passes.
double fail_score(const std::string& test_id, const HistoryStore& history, int window,
                  double decay);

/// Weighted sum normalized by the total weight; 0 when every weight is 0.
/// `d_max` must be at least the test's average duration.
PrioritizedTest compute_priority(const TestCase& test, const HistoryStore& history,
                                 const PriorityWeights& weights, int current_cycle, double d_max);

/// Sorted by descending priority, ties broken by ascending id.
std::vector<PrioritizedTest> prioritize_all(std::span<const TestCase> eligible,
                                            const HistoryStore& history,
                                            const PriorityWeights& weights, int current_cycle);

}  // namespace testsched
