#include "testsched/prioritizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace testsched {

std::string PriorityWeights::check() const {
  for (double w : {w_staleness, w_duration, w_results, w_static}) {
    if (!(w >= 0.0) || !std::isfinite(w)) return "priority weights must be finite and non-negative";
  }
  if (history_window < 1) return "history_window must be at least 1";
  if (!(decay > 0.0 && decay < 1.0)) return "decay must lie in (0, 1)";
  if (staleness_cap < 1) return "staleness_cap must be at least 1";
  return {};
}

double staleness(const std::string& test_id, const HistoryStore& history, int current_cycle,
                 int max_staleness_cap) {
  auto last = history.last_execution_cycle(test_id);
  if (!last) return 1.0;
  int gap = std::clamp(current_cycle - *last, 0, max_staleness_cap);
  return static_cast<double>(gap) / max_staleness_cap;
}

double fail_score(const std::string& test_id, const HistoryStore& history, int window,
                  double decay) {
  auto records = history.records_for(test_id);
  double numerator = 0.0;
  double denominator = 0.0;
  double weight = 1.0;
  for (int j = 0; j < window; ++j) {
    if (j < static_cast<int>(records.size()) && records[j]->outcome == Outcome::Fail) {
      numerator += weight;
    }
    denominator += weight;
    weight *= decay;
  }
  return numerator / denominator;
}

PrioritizedTest compute_priority(const TestCase& test, const HistoryStore& history,
                                 const PriorityWeights& weights, int current_cycle, double d_max) {
  const double total =
      weights.w_staleness + weights.w_duration + weights.w_results + weights.w_static;
  if (total <= 0.0) return {test, 0.0};

  double relative = d_max > 0.0 ? std::clamp(test.avg_duration / d_max, 0.0, 1.0) : 1.0;
  double duration_term = weights.prefer_short ? 1.0 - relative : relative;

  double sum = weights.w_staleness *
                   staleness(test.id, history, current_cycle, weights.staleness_cap) +
               weights.w_duration * duration_term +
               weights.w_results *
                   fail_score(test.id, history, weights.history_window, weights.decay) +
               weights.w_static * test.static_priority;
  return {test, std::clamp(sum / total, 0.0, 1.0)};
}

std::vector<PrioritizedTest> prioritize_all(std::span<const TestCase> eligible,
                                            const HistoryStore& history,
                                            const PriorityWeights& weights, int current_cycle) {
  double d_max = 0.0;
  for (const auto& t : eligible) d_max = std::max(d_max, t.avg_duration);

  std::vector<PrioritizedTest> out;
  out.reserve(eligible.size());
  for (const auto& t : eligible) {
    out.push_back(compute_priority(t, history, weights, current_cycle, d_max));
  }
  std::sort(out.begin(), out.end(), [](const PrioritizedTest& a, const PrioritizedTest& b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.test.id < b.test.id;
  });
  return out;
}

}  // namespace testsched
