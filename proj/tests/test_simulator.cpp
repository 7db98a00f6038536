#include <doctest.h>

#include "fixtures.hpp"
#include "testsched/errors.hpp"
#include "testsched/io.hpp"
#include "testsched/simulator.hpp"

using namespace testsched;
using namespace testsched::fixtures;

namespace {

SimulationConfig quiet_config(int cycles) {
  SimulationConfig c;
  c.cycles = cycles;
  c.outcome.jitter_lo = 1.0;
  c.outcome.jitter_hi = 1.0;
  return c;
}

}  // namespace

TEST_CASE("generate_workload") {
  WorkloadSpec spec;
  spec.test_count = 0;
  auto none = generate_workload(spec);
  CHECK(none.repo.tests.empty());
  CHECK(validate_repository(none.repo.tests, none.repo.agents).ok());

  spec = WorkloadSpec{};
  spec.test_count = 60;
  spec.seed = 77;
  auto a = generate_workload(spec);
  auto b = generate_workload(spec);
  CHECK(a.repo == b.repo);
  CHECK(to_json(a.outcome) == to_json(b.outcome));
  spec.seed = 78;
  CHECK_FALSE(generate_workload(spec).repo == a.repo);

  spec.compatibility_density = 1.0;
  for (const auto& t : generate_workload(spec).repo.tests) CHECK(t.compatible_agents.size() == 4);

  spec.compatibility_density = 0.05;
  for (const auto& t : generate_workload(spec).repo.tests) CHECK_FALSE(t.compatible_agents.empty());

  spec.max_defect_probability = 1.0;
  spec.min_defect_probability = 1.0;
  for (const auto& [id, p] : generate_workload(spec).outcome.defect_probability) CHECK(p == 1.0);

  spec.compatibility_density = 0.5;
  spec.min_defect_probability = 0.0;
  spec.obligatory_fraction = 0.1;
  auto too_hard = spec;
  too_hard.min_duration = -1;
  CHECK_THROWS_AS(generate_workload(too_hard), FormatError);
}

TEST_CASE("generated obligatory tests always admit a schedule") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    WorkloadSpec spec;
    spec.seed = seed;
    spec.test_count = 40;
    spec.agent_count = 3;
    spec.min_duration = 100;
    spec.max_duration = 1500;
    spec.budget = 3000;
    spec.compatibility_density = 0.4;
    spec.obligatory_fraction = 0.5;
    auto w = generate_workload(spec);
    CHECK(validate_repository(w.repo.tests, w.repo.agents).ok());

    SimulationState state{w.repo, {}, quiet_config(1)};
    state.config.outcome = w.outcome;
    state.config.solver.time_budget_ms = 500;
    CHECK_NOTHROW(run_cycle(state));
  }
}

TEST_CASE("run_cycle") {
  SUBCASE("no eligible tests") {
    SimulationState state{{{make_test("t", 5, {"down"})}, {make_agent("down", 10, false), make_agent("up", 10)}},
                          {},
                          quiet_config(1)};
    auto r = run_cycle(state);
    CHECK(r.overall_utilization == 0.0);
    CHECK(r.scheduled_count == 0);
    CHECK(r.ineligible_count == 1);
    CHECK(state.history.current_cycle() == 1);
  }
  SUBCASE("single test runs and is recorded") {
    SimulationState state{{{make_test("t", 5, {"a"})}, {make_agent("a", 10)}}, {}, quiet_config(1)};
    auto r = run_cycle(state);
    CHECK(r.executed_count == 1);
    CHECK(r.overall_utilization == 0.5);
    REQUIRE(state.history.records().size() == 1);
    CHECK(state.history.records()[0].test_id == "t");
    CHECK(state.history.records()[0].cycle == 0);
    CHECK(r.timeline.size() == 1);
  }
  SUBCASE("a failure raises next-cycle priority above a passing twin") {
    auto config = quiet_config(2);
    config.outcome.defect_probability = {{"fails", 1.0}, {"passes", 0.0}};
    SimulationState state{{{make_test("fails", 5, {"a"}), make_test("passes", 5, {"a"})}, {make_agent("a", 10)}},
                          {},
                          config};
    run_cycle(state);
    auto eligible = filter_eligible(state.repo.tests, state.repo.agents);
    auto prioritized = prioritize_all(eligible.tests, state.history, config.weights, 1);
    REQUIRE(prioritized.size() == 2);
    CHECK(prioritized[0].test.id == "fails");
    CHECK(prioritized[0].priority > prioritized[1].priority);
  }
  SUBCASE("stages run in pipeline order") {
    SimulationState state{{{make_test("t", 5, {"a"})}, {make_agent("a", 10)}}, {}, quiet_config(1)};
    std::vector<std::string> stages;
    run_cycle(state, [&](int cycle, std::string_view stage) {
      CHECK(cycle == 0);
      stages.emplace_back(stage);
    });
    CHECK(stages == std::vector<std::string>{"filter", "prioritize", "schedule", "emit", "execute", "collect", "report"});
  }
  SUBCASE("infeasible cycle leaves history untouched") {
    SimulationState state{{{make_test("big", 50, {"a"}, 0.5, true)}, {make_agent("a", 10)}}, {}, quiet_config(1)};
    state.history.append(record("big", "a", 0, Outcome::Pass));
    state.history.advance_cycle();
    auto before = state.history;
    CHECK_THROWS_AS(run_cycle(state), InfeasibleError);
    CHECK(state.history == before);
  }
}

TEST_CASE("run_simulation writes reproducible files") {
  TempDir dir("testsched_sim");
  WorkloadSpec spec;
  spec.test_count = 30;
  spec.agent_count = 3;
  spec.budget = 900;
  auto w = generate_workload(spec);

  auto run = [&](const std::filesystem::path& out, int cycles) {
    SimulationConfig config;
    config.cycles = cycles;
    config.outcome = w.outcome;
    config.out_dir = out;
    return run_simulation(config, w.repo);
  };
  auto first = run(dir.path() / "one", 4);
  auto second = run(dir.path() / "two", 4);
  REQUIRE(first.size() == 4);
  for (const auto* name : {"history.jsonl", "pipeline.log", "cycle_0/report.json", "cycle_3/report.json"}) {
    CHECK(read_text_file(dir.path() / "one" / name) == read_text_file(dir.path() / "two" / name));
  }
  CHECK(std::filesystem::exists(dir.path() / "one" / "timing.jsonl"));

  auto history = load_history(dir.path() / "one" / "history.jsonl");
  CHECK(history.current_cycle() == 4);
  for (const auto& r : history.records()) {
    CHECK(r.cycle >= 0);
    CHECK(r.cycle < 4);
  }
  CHECK(history.records().size() == static_cast<std::size_t>(
                                        first[0].executed_count + first[1].executed_count +
                                        first[2].executed_count + first[3].executed_count));

  CHECK(run(dir.path() / "single", 1).size() == 1);
}

TEST_CASE("run_simulation continues from an existing history") {
  Repository repo{{make_test("t", 5, {"a"})}, {make_agent("a", 10)}};
  HistoryStore history;
  history.append(record("t", "a", 0, Outcome::Fail));
  history.advance_cycle();
  auto reports = run_simulation(quiet_config(2), repo, history);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].cycle == 1);
  CHECK(reports[1].cycle == 2);
}

TEST_CASE("run_simulation reports the failing cycle and keeps persisted history") {
  TempDir dir("testsched_abort");
  Repository repo{{make_test("must", 50, {"a"}, 0.5, true)}, {make_agent("a", 10)}};
  HistoryStore history;
  history.append(record("must", "a", 0, Outcome::Pass));
  history.advance_cycle();
  save_history(history, dir.path() / "seed.jsonl");

  auto config = quiet_config(3);
  config.out_dir = dir.path() / "out";
  try {
    run_simulation(config, repo, history);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).starts_with("cycle 1: "));
    CHECK(e.test_ids() == std::vector<std::string>{"must"});
  }
  CHECK(read_text_file(dir.path() / "out" / "history.jsonl") == read_text_file(dir.path() / "seed.jsonl"));
}
