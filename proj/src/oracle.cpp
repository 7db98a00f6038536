#include <algorithm>
#include <optional>

#include "scheduler_detail.hpp"
#include "testsched/errors.hpp"
#include "testsched/scheduler.hpp"

namespace testsched {

namespace {

// Plain enumeration: every test goes to "none" or to one compatible agent.
// Only budget overflow cuts a branch, since such partial assignments have no
// feasible completion.
class Enumerator {
 public:
  explicit Enumerator(const SchedulingInstance& instance)
      : instance_(instance), order_(detail::priority_order(instance)) {
    for (const auto& a : instance.agents) residual_.push_back(budget_ms(a.budget));
    choice_.assign(order_.size(), -1);
  }

  void run() { visit(0); }

  const std::optional<Schedule>& best() const { return best_; }

 private:
  void visit(std::size_t k) {
    if (k == order_.size()) {
      consider();
      return;
    }
    const auto& test = instance_.prioritized[order_[k]].test;
    if (!test.obligatory) {
      choice_[k] = -1;
      visit(k + 1);
    }
    const auto d = duration_ms(test.avg_duration);
    for (std::size_t a = 0; a < instance_.agents.size(); ++a) {
      if (!test.compatible_agents.contains(instance_.agents[a].id)) continue;
      if (residual_[a] < d) continue;
      residual_[a] -= d;
      choice_[k] = static_cast<int>(a);
      visit(k + 1);
      residual_[a] += d;
    }
    choice_[k] = -1;
  }

  void consider() {
    Schedule candidate;
    candidate.objective.staleness_cap = instance_.pair_staleness_cap;
    for (std::size_t k = 0; k < order_.size(); ++k) {
      if (choice_[k] < 0) continue;
      const auto& p = instance_.prioritized[order_[k]];
      const auto& agent = instance_.agents[choice_[k]].id;
      candidate.assignments[agent].push_back(p.test.id);
      candidate.objective.priority_units += priority_units(p.priority);
      candidate.objective.used_ms += duration_ms(p.test.avg_duration);
      if (instance_.diversity) {
        auto it = instance_.pair_last_cycle.find({p.test.id, agent});
        int gap = it == instance_.pair_last_cycle.end()
                      ? instance_.pair_staleness_cap
                      : std::clamp(instance_.current_cycle - it->second, 0,
                                   instance_.pair_staleness_cap);
        candidate.objective.diversity_units += gap;
      }
    }
    if (best_) {
      if (candidate.objective < best_->objective) return;
      if (candidate.objective == best_->objective &&
          !(candidate.sorted_pairs() < best_->sorted_pairs())) {
        return;
      }
    }
    best_ = std::move(candidate);
  }

  const SchedulingInstance& instance_;
  std::vector<std::size_t> order_;
  std::vector<std::int64_t> residual_;
  std::vector<int> choice_;
  std::optional<Schedule> best_;
};

}  // namespace

Schedule schedule_oracle(const SchedulingInstance& instance) {
  if (instance.prioritized.size() > kOracleMaxTests || instance.agents.size() > kOracleMaxAgents) {
    throw InstanceTooLargeError("oracle handles at most " + std::to_string(kOracleMaxTests) +
                                " tests and " + std::to_string(kOracleMaxAgents) + " agents");
  }
  Enumerator enumerator(instance);
  enumerator.run();
  if (!enumerator.best()) {
    std::vector<std::string> ids;
    for (std::size_t k : detail::priority_order(instance)) {
      const auto& t = instance.prioritized[k].test;
      if (t.obligatory) ids.push_back(t.id);
    }
    throw InfeasibleError(ids, "no assignment places every obligatory test");
  }
  return *enumerator.best();
}

}  // namespace testsched
