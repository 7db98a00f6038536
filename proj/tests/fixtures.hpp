#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "testsched/domain.hpp"
#include "testsched/prioritizer.hpp"
#include "testsched/scheduler.hpp"

namespace testsched::fixtures {

inline TestCase make_test(std::string id, double duration, std::set<std::string> agents,
                          double static_priority = 0.5, bool obligatory = false, bool active = true) {
  return TestCase{std::move(id), duration, static_priority, std::move(agents), obligatory, active};
}

inline TestAgent make_agent(std::string id, double budget, bool active = true) {
  return TestAgent{std::move(id), budget, {}, active};
}

inline PrioritizedTest prioritized(std::string id, double priority, double duration,
                                   std::set<std::string> agents, bool obligatory = false) {
  return PrioritizedTest{make_test(std::move(id), duration, std::move(agents), 0.5, obligatory), priority};
}

inline ExecutionRecord record(std::string test, std::string agent, int cycle, Outcome outcome,
                              double duration = 1.0) {
  return ExecutionRecord{std::move(test), std::move(agent), cycle, outcome, duration};
}

/// The first-fill trap: one long test blocks two shorter ones worth more.
inline SchedulingInstance knapsack_trap() {
  SchedulingInstance inst;
  inst.agents = {make_agent("X", 10)};
  inst.prioritized = {prioritized("A", 0.5, 6, {"X"}), prioritized("B", 0.4, 5, {"X"}),
                      prioritized("C", 0.4, 5, {"X"})};
  return inst;
}

struct RandomInstanceSpec {
  int max_tests = 8;
  int max_agents = 3;
  int max_obligatory = 2;
  int time_budget_ms = 10000;
  std::int64_t node_limit = 0;
};

/// Random small instance; priorities are multiples of 1/1000 so ties occur.
inline SchedulingInstance random_instance(std::uint64_t seed, const RandomInstanceSpec& spec) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto below = [&](int n) { return static_cast<int>(unit() * n); };

  SchedulingInstance inst;
  inst.solver_time_budget_ms = spec.time_budget_ms;
  inst.node_limit = spec.node_limit;
  inst.current_cycle = 5 + below(10);
  const int agents = 1 + below(spec.max_agents);
  const int tests = below(spec.max_tests + 1);
  const double density = 0.3 + 0.7 * unit();
  for (int a = 0; a < agents; ++a) {
    inst.agents.push_back(make_agent("a" + std::to_string(a), 5 + below(16)));
  }
  const int obligatory = below(spec.max_obligatory + 1);
  for (int t = 0; t < tests; ++t) {
    std::set<std::string> compat;
    for (const auto& a : inst.agents) {
      if (unit() < density) compat.insert(a.id);
    }
    if (compat.empty()) compat.insert(inst.agents[below(agents)].id);
    double priority = below(1001) / 1000.0;
    double duration = 1 + below(9);
    char id[16];
    std::snprintf(id, sizeof id, "t%02d", t);
    inst.prioritized.push_back(prioritized(id, priority, duration, compat, t < obligatory));
    for (const auto& a : compat) {
      if (unit() < 0.4) inst.pair_last_cycle[{id, a}] = inst.current_cycle - 1 - below(10);
    }
  }
  std::stable_sort(inst.prioritized.begin(), inst.prioritized.end(),
                   [](const PrioritizedTest& a, const PrioritizedTest& b) {
                     if (a.priority != b.priority) return a.priority > b.priority;
                     return a.test.id < b.test.id;
                   });
  return inst;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() /
              (name + "_" + std::to_string(std::random_device{}()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsched::fixtures
