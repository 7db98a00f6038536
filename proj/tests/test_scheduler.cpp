#include <doctest.h>

#include <chrono>

#include "fixtures.hpp"
#include "testsched/errors.hpp"

using namespace testsched;
using namespace testsched::fixtures;

namespace {

void require_feasible(const Schedule& s, const SchedulingInstance& inst) {
  auto problems = check_schedule(s, inst);
  INFO((problems.empty() ? std::string() : problems.front()));
  CHECK(problems.empty());
}

}  // namespace

TEST_CASE("pair_staleness") {
  PairHistory h{{{"t", "a"}, 4}, {{"t", "b"}, 5}};
  CHECK(pair_staleness("t", "a", h, 5, 8) == 0.125);
  CHECK(pair_staleness("t", "c", h, 5, 8) == 1.0);
  CHECK(pair_staleness("t", "b", h, 5, 8) == 0.0);
  CHECK(pair_staleness("t", "a", h, 50, 8) == 1.0);
}

TEST_CASE("schedule_greedy") {
  SUBCASE("no tests") {
    SchedulingInstance inst;
    inst.agents = {make_agent("X", 10)};
    auto s = schedule_greedy(inst);
    CHECK(s.assignments.empty());
    CHECK(s.objective == ObjectiveVector{});
  }
  SUBCASE("single feasible test") {
    SchedulingInstance inst;
    inst.agents = {make_agent("X", 10)};
    inst.prioritized = {prioritized("t", 0.9, 5, {"X"})};
    auto s = schedule_greedy(inst);
    CHECK(s.assignments.at("X") == std::vector<std::string>{"t"});
    CHECK(s.objective.used_time() == 5.0);
  }
  SUBCASE("first-fill falls into the knapsack trap") {
    auto inst = knapsack_trap();
    auto s = schedule_greedy(inst);
    CHECK(s.assignments.at("X") == std::vector<std::string>{"A"});
    CHECK(s.objective.total_priority() == doctest::Approx(0.5));
  }
  SUBCASE("agents are filled in input order, skipping incompatible tests") {
    SchedulingInstance inst;
    inst.agents = {make_agent("X", 10), make_agent("Y", 10)};
    inst.prioritized = {prioritized("a", 0.9, 6, {"Y"}), prioritized("b", 0.8, 6, {"X", "Y"}),
                        prioritized("c", 0.7, 4, {"X", "Y"})};
    auto s = schedule_greedy(inst);
    CHECK(s.assignments.at("X") == std::vector<std::string>{"b", "c"});
    CHECK(s.assignments.at("Y") == std::vector<std::string>{"a"});
    require_feasible(s, inst);
  }
}

TEST_CASE("schedule_optimal examples") {
  SUBCASE("escapes the knapsack trap") {
    auto inst = knapsack_trap();
    auto s = schedule_optimal(inst);
    CHECK(s.assignments.at("X") == std::vector<std::string>{"B", "C"});
    CHECK(s.objective.total_priority() == doctest::Approx(0.8));
    CHECK(s.stats.complete);
  }
  SUBCASE("diversity decides between equally good agents") {
    SchedulingInstance inst;
    inst.current_cycle = 3;
    inst.agents = {make_agent("X", 10), make_agent("Y", 10)};
    inst.prioritized = {prioritized("t", 0.6, 4, {"X", "Y"})};
    inst.pair_last_cycle[{"t", "X"}] = 2;
    auto s = schedule_optimal(inst);
    CHECK(s.assignments.count("X") == 0);
    CHECK(s.assignments.at("Y") == std::vector<std::string>{"t"});
    CHECK(s.objective.diversity() == 1.0);
  }
  SUBCASE("obligatory test larger than every compatible budget") {
    SchedulingInstance inst;
    inst.agents = {make_agent("X", 10), make_agent("Y", 30)};
    inst.prioritized = {prioritized("big", 0.2, 20, {"X"}, true), prioritized("ok", 0.9, 2, {"X", "Y"})};
    try {
      schedule_optimal(inst);
      FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
      CHECK(e.test_ids() == std::vector<std::string>{"big"});
    }
  }
  SUBCASE("obligatory tests jointly too large") {
    SchedulingInstance inst;
    inst.agents = {make_agent("X", 10)};
    inst.prioritized = {prioritized("o1", 0.2, 6, {"X"}, true), prioritized("o2", 0.1, 6, {"X"}, true)};
    CHECK_THROWS_AS(schedule_optimal(inst), InfeasibleError);
    CHECK_THROWS_AS(schedule_oracle(inst), InfeasibleError);
  }
  SUBCASE("obligatory test displaces a higher-priority one") {
    SchedulingInstance inst;
    inst.agents = {make_agent("X", 10)};
    inst.prioritized = {prioritized("hot", 0.9, 10, {"X"}), prioritized("must", 0.1, 5, {"X"}, true),
                        prioritized("filler", 0.05, 5, {"X"})};
    auto s = schedule_optimal(inst);
    CHECK(s.assignments.at("X") == std::vector<std::string>{"must", "filler"});
    CHECK(missing_obligatory(schedule_greedy(inst), inst) == std::vector<std::string>{"must"});
  }
}

TEST_CASE("schedule_oracle examples") {
  auto trap = knapsack_trap();
  CHECK(schedule_oracle(trap).objective == schedule_optimal(trap).objective);

  SchedulingInstance empty;
  CHECK(schedule_oracle(empty).assignments.empty());

  SchedulingInstance incompatible;
  incompatible.agents = {make_agent("X", 10)};
  incompatible.prioritized = {prioritized("t", 0.5, 1, {"Y"})};
  auto s = schedule_oracle(incompatible);
  CHECK(s.assignments.empty());
  CHECK(s.objective == ObjectiveVector{});

  SchedulingInstance big;
  big.agents = {make_agent("X", 10)};
  for (int i = 0; i < 13; ++i) big.prioritized.push_back(prioritized("t" + std::to_string(i), 0.1, 1, {"X"}));
  CHECK_THROWS_AS(schedule_oracle(big), InstanceTooLargeError);
}

TEST_CASE("equal objectives resolve to the smallest sorted pair list") {
  SchedulingInstance inst;
  inst.agents = {make_agent("X", 5), make_agent("Y", 5)};
  inst.prioritized = {prioritized("p", 0.5, 5, {"X", "Y"}), prioritized("q", 0.5, 5, {"X", "Y"})};
  auto s = schedule_optimal(inst);
  // (p,X),(q,Y) sorts before (p,Y),(q,X).
  CHECK(s.assignments.at("X") == std::vector<std::string>{"p"});
  CHECK(s.assignments.at("Y") == std::vector<std::string>{"q"});
  CHECK(schedule_oracle(inst) == s);
}

TEST_CASE("optimal schedules are feasible, cover obligations, dominate greedy and match the oracle") {
  int compared = 0;
  int infeasible = 0;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    auto inst = random_instance(seed, {});
    std::optional<Schedule> oracle;
    bool oracle_infeasible = false;
    try {
      oracle = schedule_oracle(inst);
    } catch (const InfeasibleError&) {
      oracle_infeasible = true;
    }
    try {
      auto s = schedule_optimal(inst);
      CHECK_FALSE(oracle_infeasible);
      require_feasible(s, inst);
      CHECK(missing_obligatory(s, inst).empty());
      CHECK(s.stats.complete);
      CHECK(s.objective == evaluate(inst, s.assignments));
      if (oracle) {
        CHECK(s.objective == oracle->objective);
        CHECK(s == *oracle);
        ++compared;
      }
      auto greedy = schedule_greedy(inst);
      require_feasible(greedy, inst);
      if (missing_obligatory(greedy, inst).empty()) CHECK(s.objective >= greedy.objective);
      CHECK(schedule_optimal(inst) == s);
    } catch (const InfeasibleError&) {
      CHECK(oracle_infeasible);
      ++infeasible;
    }
  }
  CHECK(compared > 100);
  MESSAGE("compared " << compared << " instances, " << infeasible << " infeasible");
}

TEST_CASE("rotation visits every compatible agent once per round") {
  const std::vector<std::string> agents = {"a1", "a2", "a3", "a4"};
  SchedulingInstance inst;
  for (const auto& id : agents) inst.agents.push_back(make_agent(id, 100));
  inst.prioritized = {prioritized("t", 0.5, 10, {agents.begin(), agents.end()})};

  std::map<std::string, int> visits;
  for (int cycle = 0; cycle < 8; ++cycle) {
    inst.current_cycle = cycle;
    auto s = schedule_optimal(inst);
    REQUIRE(s.assignments.size() == 1);
    const auto& agent = s.assignments.begin()->first;
    ++visits[agent];
    inst.pair_last_cycle[{"t", agent}] = cycle;
    if (cycle == 3) {
      for (const auto& id : agents) CHECK(visits[id] == 1);
    }
  }
  for (const auto& id : agents) CHECK(visits[id] == 2);
}

TEST_CASE("time budget bounds the search on a large instance") {
  SchedulingInstance inst = random_instance(99, {});
  inst.agents.clear();
  inst.prioritized.clear();
  for (int a = 0; a < 5; ++a) inst.agents.push_back(make_agent("a" + std::to_string(a), 400));
  for (int i = 0; i < 150; ++i) {
    inst.prioritized.push_back(prioritized("t" + std::to_string(1000 + i), ((i * 7919) % 1000) / 1000.0,
                                           3 + (i * 31) % 17, {"a0", "a1", "a2", "a3", "a4"}));
  }
  std::sort(inst.prioritized.begin(), inst.prioritized.end(), [](const auto& a, const auto& b) {
    return a.priority != b.priority ? a.priority > b.priority : a.test.id < b.test.id;
  });
  inst.solver_time_budget_ms = 50;

  auto start = std::chrono::steady_clock::now();
  auto s = schedule_optimal(inst);
  auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed < 50 + 50);
  require_feasible(s, inst);
  CHECK(s.objective >= schedule_greedy(inst).objective);
}

TEST_CASE("node limit makes truncated searches reproducible") {
  auto inst = random_instance(5, {12, 3, 0});
  inst.node_limit = 40;
  auto first = schedule_optimal(inst);
  auto second = schedule_optimal(inst);
  CHECK(first == second);
  CHECK(first.stats.nodes == second.stats.nodes);
}

TEST_CASE("check_schedule flags each invariant") {
  auto inst = knapsack_trap();
  inst.agents.push_back(make_agent("Y", 10));
  Schedule s;
  s.assignments["X"] = {"A", "B"};
  s.assignments["Y"] = {"A"};
  auto problems = check_schedule(s, inst);
  CHECK(problems.size() == 3);  // overflow on X, duplicate A, A incompatible with Y
}
