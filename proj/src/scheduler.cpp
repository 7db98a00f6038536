#include "testsched/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>

#include "scheduler_detail.hpp"
#include "testsched/errors.hpp"

namespace testsched {

std::int64_t priority_units(double priority) {
  return std::llround(std::clamp(priority, 0.0, 1.0) * kPriorityScale);
}

std::int64_t duration_ms(double seconds) {
  return std::max<std::int64_t>(1, std::llround(seconds * 1000.0));
}

std::int64_t budget_ms(double seconds) { return std::max<std::int64_t>(0, std::llround(seconds * 1000.0)); }

std::size_t Schedule::test_count() const {
  std::size_t n = 0;
  for (const auto& [agent, tests] : assignments) n += tests.size();
  return n;
}

std::vector<PairKey> Schedule::sorted_pairs() const {
  std::vector<PairKey> pairs;
  for (const auto& [agent, tests] : assignments) {
    for (const auto& t : tests) pairs.emplace_back(t, agent);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double pair_staleness(const std::string& test_id, const std::string& agent_id,
                      const PairHistory& pair_last_cycle, int current_cycle, int cap) {
  return static_cast<double>(detail::pair_gap(test_id, agent_id, pair_last_cycle, current_cycle, cap)) /
         cap;
}

namespace detail {

int pair_gap(const std::string& test_id, const std::string& agent_id,
             const PairHistory& pair_last_cycle, int current_cycle, int cap) {
  auto it = pair_last_cycle.find({test_id, agent_id});
  if (it == pair_last_cycle.end()) return cap;
  return std::clamp(current_cycle - it->second, 0, cap);
}

std::vector<std::size_t> priority_order(const SchedulingInstance& instance) {
  std::vector<std::size_t> order(instance.prioritized.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto pa = priority_units(instance.prioritized[a].priority);
    auto pb = priority_units(instance.prioritized[b].priority);
    if (pa != pb) return pa > pb;
    return instance.prioritized[a].test.id < instance.prioritized[b].test.id;
  });
  return order;
}

}  // namespace detail

ObjectiveVector evaluate(const SchedulingInstance& instance,
                         const std::map<std::string, std::vector<std::string>>& assignments) {
  std::unordered_map<std::string, const PrioritizedTest*> by_id;
  for (const auto& p : instance.prioritized) by_id.emplace(p.test.id, &p);

  ObjectiveVector obj;
  obj.staleness_cap = instance.pair_staleness_cap;
  for (const auto& [agent, tests] : assignments) {
    for (const auto& id : tests) {
      auto it = by_id.find(id);
      if (it == by_id.end()) continue;
      obj.priority_units += priority_units(it->second->priority);
      obj.used_ms += duration_ms(it->second->test.avg_duration);
      if (instance.diversity) {
        obj.diversity_units += detail::pair_gap(id, agent, instance.pair_last_cycle,
                                                instance.current_cycle, instance.pair_staleness_cap);
      }
    }
  }
  return obj;
}

std::vector<std::string> check_schedule(const Schedule& schedule,
                                        const SchedulingInstance& instance) {
  std::vector<std::string> problems;
  std::unordered_map<std::string, const TestCase*> tests;
  for (const auto& p : instance.prioritized) tests.emplace(p.test.id, &p.test);
  std::unordered_map<std::string, const TestAgent*> agents;
  for (const auto& a : instance.agents) agents.emplace(a.id, &a);

  std::set<std::string> seen;
  for (const auto& [agent_id, ids] : schedule.assignments) {
    auto agent = agents.find(agent_id);
    if (agent == agents.end()) {
      problems.push_back("unknown agent '" + agent_id + "'");
      continue;
    }
    std::int64_t used = 0;
    for (const auto& id : ids) {
      auto test = tests.find(id);
      if (test == tests.end()) {
        problems.push_back("unknown test '" + id + "'");
        continue;
      }
      if (!seen.insert(id).second) problems.push_back("test '" + id + "' assigned more than once");
      if (!test->second->compatible_agents.contains(agent_id)) {
        problems.push_back("test '" + id + "' is not compatible with agent '" + agent_id + "'");
      }
      used += duration_ms(test->second->avg_duration);
    }
    if (used > budget_ms(agent->second->budget)) {
      problems.push_back("agent '" + agent_id + "' exceeds its budget");
    }
  }
  return problems;
}

std::vector<std::string> missing_obligatory(const Schedule& schedule,
                                            const SchedulingInstance& instance) {
  std::set<std::string> assigned;
  for (const auto& [agent, ids] : schedule.assignments) assigned.insert(ids.begin(), ids.end());
  std::vector<std::string> missing;
  for (const auto& p : instance.prioritized) {
    if (p.test.obligatory && !assigned.contains(p.test.id)) missing.push_back(p.test.id);
  }
  return missing;
}

Schedule schedule_greedy(const SchedulingInstance& instance) {
  auto order = detail::priority_order(instance);
  std::vector<bool> taken(order.size(), false);
  Schedule schedule;
  for (const auto& agent : instance.agents) {
    std::int64_t residual = budget_ms(agent.budget);
    std::vector<std::string> assigned;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (taken[k]) continue;
      const auto& test = instance.prioritized[order[k]].test;
      if (!test.compatible_agents.contains(agent.id)) continue;
      auto d = duration_ms(test.avg_duration);
      if (d > residual) continue;
      residual -= d;
      taken[k] = true;
      assigned.push_back(test.id);
    }
    if (!assigned.empty()) schedule.assignments[agent.id] = std::move(assigned);
  }
  schedule.objective = evaluate(instance, schedule.assignments);
  return schedule;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Option {
  int agent;
  int gap;  // capped pair staleness numerator
};

struct Model {
  std::vector<std::size_t> source;  // index into instance.prioritized
  std::vector<std::int64_t> value;
  std::vector<std::int64_t> dur;
  std::vector<bool> obligatory;
  std::vector<std::vector<Option>> options;  // by descending gap, then agent id
  std::vector<int> max_gap;
  std::vector<std::int64_t> budget;
  std::vector<std::string> test_ids;
  std::vector<std::string> agent_ids;
  std::vector<std::size_t> by_density;  // test indices by value/duration, descending
  std::vector<std::size_t> obligatory_tests;
};

Model build_model(const SchedulingInstance& instance) {
  Model m;
  std::unordered_map<std::string, int> agent_index;
  for (const auto& a : instance.agents) {
    agent_index.emplace(a.id, static_cast<int>(m.agent_ids.size()));
    m.agent_ids.push_back(a.id);
    m.budget.push_back(budget_ms(a.budget));
  }
  for (std::size_t src : detail::priority_order(instance)) {
    const auto& p = instance.prioritized[src];
    std::size_t i = m.source.size();
    m.source.push_back(src);
    m.test_ids.push_back(p.test.id);
    m.value.push_back(priority_units(p.priority));
    m.dur.push_back(duration_ms(p.test.avg_duration));
    m.obligatory.push_back(p.test.obligatory);
    if (p.test.obligatory) m.obligatory_tests.push_back(i);

    std::vector<Option> opts;
    for (const auto& agent_id : p.test.compatible_agents) {
      auto it = agent_index.find(agent_id);
      if (it == agent_index.end()) continue;
      int gap = instance.diversity
                    ? detail::pair_gap(p.test.id, agent_id, instance.pair_last_cycle,
                                       instance.current_cycle, instance.pair_staleness_cap)
                    : 0;
      opts.push_back({it->second, gap});
    }
    std::sort(opts.begin(), opts.end(), [&](const Option& a, const Option& b) {
      if (a.gap != b.gap) return a.gap > b.gap;
      return m.agent_ids[a.agent] < m.agent_ids[b.agent];
    });
    int best = 0;
    for (const auto& o : opts) best = std::max(best, o.gap);
    m.max_gap.push_back(best);
    m.options.push_back(std::move(opts));
  }
  m.by_density.resize(m.value.size());
  std::iota(m.by_density.begin(), m.by_density.end(), 0);
  std::stable_sort(m.by_density.begin(), m.by_density.end(), [&](std::size_t a, std::size_t b) {
    return static_cast<__int128>(m.value[a]) * m.dur[b] > static_cast<__int128>(m.value[b]) * m.dur[a];
  });
  return m;
}

class BranchAndBound {
 public:
  BranchAndBound(const Model& model, const SchedulingInstance& instance, Clock::time_point deadline)
      : m_(model),
        instance_(instance),
        deadline_(deadline),
        choice_(model.value.size(), -1),
        residual_(model.budget) {
    cur_.staleness_cap = instance.pair_staleness_cap;
  }

  void seed(const std::vector<int>& choice) {
    ObjectiveVector obj;
    obj.staleness_cap = instance_.pair_staleness_cap;
    for (std::size_t i = 0; i < choice.size(); ++i) {
      if (choice[i] < 0) continue;
      obj.priority_units += m_.value[i];
      obj.used_ms += m_.dur[i];
      obj.diversity_units += gap_of(i, choice[i]);
    }
    offer(choice, obj);
  }

  void run() { descend(0); }

  bool has_incumbent() const { return best_.has_value(); }
  const std::vector<int>& best_choice() const { return best_->choice; }
  const ObjectiveVector& best_objective() const { return best_->objective; }
  std::int64_t nodes() const { return nodes_; }
  bool complete() const { return !stopped_; }

 private:
  struct Incumbent {
    std::vector<int> choice;
    ObjectiveVector objective;
    std::vector<std::pair<const std::string*, const std::string*>> pairs;
  };

  int gap_of(std::size_t test, int agent) const {
    for (const auto& o : m_.options[test]) {
      if (o.agent == agent) return o.gap;
    }
    return 0;
  }

  std::vector<std::pair<const std::string*, const std::string*>> pairs_of(
      const std::vector<int>& choice) const {
    std::vector<std::pair<const std::string*, const std::string*>> pairs;
    for (std::size_t i = 0; i < choice.size(); ++i) {
      if (choice[i] >= 0) pairs.emplace_back(&m_.test_ids[i], &m_.agent_ids[choice[i]]);
    }
    std::sort(pairs.begin(), pairs.end(), pair_less);
    return pairs;
  }

  static bool pair_less(const std::pair<const std::string*, const std::string*>& a,
                        const std::pair<const std::string*, const std::string*>& b) {
    if (*a.first != *b.first) return *a.first < *b.first;
    return *a.second < *b.second;
  }

  void offer(const std::vector<int>& choice, const ObjectiveVector& obj) {
    if (best_) {
      auto c = obj <=> best_->objective;
      if (c < 0) return;
      if (c == 0) {
        auto pairs = pairs_of(choice);
        if (!std::lexicographical_compare(pairs.begin(), pairs.end(), best_->pairs.begin(),
                                          best_->pairs.end(), pair_less)) {
          return;
        }
        best_ = Incumbent{choice, obj, std::move(pairs)};
        return;
      }
    }
    best_ = Incumbent{choice, obj, pairs_of(choice)};
  }

  bool out_of_budget() {
    ++nodes_;
    if (instance_.node_limit > 0 && nodes_ > instance_.node_limit) stopped_ = true;
    if ((nodes_ & 255) == 0 && Clock::now() >= deadline_) stopped_ = true;
    return stopped_;
  }

  bool fits_somewhere(std::size_t test) const {
    for (const auto& o : m_.options[test]) {
      if (m_.dur[test] <= residual_[o.agent]) return true;
    }
    return false;
  }

  // Lexicographic upper bound over every completion of the current node.
  // Returns nullopt when some remaining obligatory test can no longer fit.
  std::optional<ObjectiveVector> bound(std::size_t depth, bool& anything_fits) const {
    for (std::size_t j : m_.obligatory_tests) {
      if (j >= depth && !fits_somewhere(j)) return std::nullopt;
    }
    std::int64_t pooled = 0;
    for (auto r : residual_) pooled += r;

    ObjectiveVector ub = cur_;
    std::int64_t capacity = pooled;
    std::int64_t fittable_time = 0;
    anything_fits = false;
    bool filled = false;
    for (std::size_t j : m_.by_density) {
      if (j < depth || !fits_somewhere(j)) continue;
      anything_fits = true;
      ub.diversity_units += m_.max_gap[j];
      fittable_time += m_.dur[j];
      if (filled) continue;
      if (m_.dur[j] <= capacity) {
        ub.priority_units += m_.value[j];
        capacity -= m_.dur[j];
      } else {
        auto part = static_cast<__int128>(m_.value[j]) * capacity;
        ub.priority_units += static_cast<std::int64_t>((part + m_.dur[j] - 1) / m_.dur[j]);
        filled = true;
      }
    }
    ub.used_ms += std::min(pooled, fittable_time);
    return ub;
  }

  void descend(std::size_t depth) {
    if (out_of_budget()) return;
    const std::size_t n = m_.value.size();
    if (depth == n) {
      offer(choice_, cur_);
      return;
    }
    bool anything_fits = false;
    auto ub = bound(depth, anything_fits);
    if (!ub) return;
    if (best_ && *ub < best_->objective) return;
    if (!anything_fits) {
      // Nothing left fits anywhere and no obligatory test remains: the
      // rest of the subtree is a single leaf.
      offer(choice_, cur_);
      return;
    }

    const auto d = m_.dur[depth];
    for (const auto& o : m_.options[depth]) {
      if (d > residual_[o.agent]) continue;
      residual_[o.agent] -= d;
      choice_[depth] = o.agent;
      cur_.priority_units += m_.value[depth];
      cur_.diversity_units += o.gap;
      cur_.used_ms += d;
      descend(depth + 1);
      cur_.priority_units -= m_.value[depth];
      cur_.diversity_units -= o.gap;
      cur_.used_ms -= d;
      choice_[depth] = -1;
      residual_[o.agent] += d;
      if (stopped_) return;
    }
    if (!m_.obligatory[depth]) descend(depth + 1);
  }

  const Model& m_;
  const SchedulingInstance& instance_;
  Clock::time_point deadline_;
  std::vector<int> choice_;
  std::vector<std::int64_t> residual_;
  ObjectiveVector cur_;
  std::optional<Incumbent> best_;
  std::int64_t nodes_ = 0;
  bool stopped_ = false;
};

std::vector<int> to_choice(const Model& m, const Schedule& schedule) {
  std::unordered_map<std::string, std::size_t> test_index;
  for (std::size_t i = 0; i < m.test_ids.size(); ++i) test_index.emplace(m.test_ids[i], i);
  std::unordered_map<std::string, int> agent_index;
  for (std::size_t a = 0; a < m.agent_ids.size(); ++a) agent_index.emplace(m.agent_ids[a], static_cast<int>(a));
  std::vector<int> choice(m.test_ids.size(), -1);
  for (const auto& [agent, ids] : schedule.assignments) {
    for (const auto& id : ids) choice[test_index.at(id)] = agent_index.at(agent);
  }
  return choice;
}

// Obligatory tests first-fit in priority order, then first-fill as usual.
std::optional<std::vector<int>> obligatory_first_fill(const Model& m) {
  const std::size_t n = m.value.size();
  std::vector<int> choice(n, -1);
  auto residual = m.budget;
  auto place = [&](std::size_t i) {
    int best = -1;
    for (const auto& o : m.options[i]) {
      if (m.dur[i] <= residual[o.agent] && (best < 0 || o.agent < best)) best = o.agent;
    }
    if (best < 0) return false;
    residual[best] -= m.dur[i];
    choice[i] = best;
    return true;
  };
  for (std::size_t i : m.obligatory_tests) {
    if (!place(i)) return std::nullopt;
  }
  for (std::size_t a = 0; a < m.budget.size(); ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      if (choice[i] >= 0 || m.dur[i] > residual[a]) continue;
      bool compatible = std::any_of(m.options[i].begin(), m.options[i].end(),
                                    [&](const Option& o) { return o.agent == static_cast<int>(a); });
      if (!compatible) continue;
      residual[a] -= m.dur[i];
      choice[i] = static_cast<int>(a);
    }
  }
  return choice;
}

Schedule to_schedule(const Model& m, const std::vector<int>& choice, const ObjectiveVector& obj) {
  Schedule schedule;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    if (choice[i] >= 0) schedule.assignments[m.agent_ids[choice[i]]].push_back(m.test_ids[i]);
  }
  schedule.objective = obj;
  return schedule;
}

}  // namespace

Schedule schedule_optimal(const SchedulingInstance& instance) {
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::milliseconds(std::max(0, instance.solver_time_budget_ms));

  Model m = build_model(instance);

  std::vector<std::string> unplaceable;
  for (std::size_t i : m.obligatory_tests) {
    bool fits = std::any_of(m.options[i].begin(), m.options[i].end(),
                            [&](const Option& o) { return m.dur[i] <= m.budget[o.agent]; });
    if (!fits) unplaceable.push_back(m.test_ids[i]);
  }
  if (!unplaceable.empty()) {
    throw InfeasibleError(unplaceable, "obligatory tests fit on no compatible agent");
  }

  BranchAndBound search(m, instance, deadline);
  Schedule greedy = schedule_greedy(instance);
  if (missing_obligatory(greedy, instance).empty()) {
    search.seed(to_choice(m, greedy));
  } else if (auto seeded = obligatory_first_fill(m)) {
    search.seed(*seeded);
  }
  search.run();

  if (!search.has_incumbent()) {
    std::vector<std::string> ids;
    for (std::size_t i : m.obligatory_tests) ids.push_back(m.test_ids[i]);
    throw InfeasibleError(ids, search.complete()
                                   ? "obligatory tests cannot be placed together within agent budgets"
                                   : "no placement of the obligatory tests found within the solver budget");
  }

  Schedule schedule = to_schedule(m, search.best_choice(), search.best_objective());
  schedule.stats.nodes = search.nodes();
  schedule.stats.complete = search.complete();
  schedule.stats.wall_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return schedule;
}

}  // namespace testsched
