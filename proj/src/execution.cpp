#include "testsched/execution.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <unordered_map>

#include "testsched/errors.hpp"
#include "testsched/io.hpp"

namespace testsched {

using nlohmann::json;

double TestPlan::planned_total() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.planned_duration;
  return total;
}

double OutcomeModel::probability_for(const std::string& test_id) const {
  auto it = defect_probability.find(test_id);
  return it == defect_probability.end() ? default_defect_probability : it->second;
}

std::string OutcomeModel::check() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(default_defect_probability)) return "default defect probability outside [0, 1]";
  for (const auto& [id, p] : defect_probability) {
    if (!in_unit(p)) return "defect probability of '" + id + "' outside [0, 1]";
  }
  if (!(jitter_lo > 0.0 && jitter_lo <= jitter_hi)) return "duration jitter needs 0 < lo <= hi";
  return {};
}

std::vector<TestPlan> emit_test_plans(const Schedule& schedule,
                                      std::span<const PrioritizedTest> prioritized,
                                      std::span<const TestAgent> agents, int cycle) {
  std::unordered_map<std::string, const PrioritizedTest*> by_id;
  for (const auto& p : prioritized) by_id.emplace(p.test.id, &p);

  std::vector<TestPlan> plans;
  for (const auto& agent : agents) {
    auto it = schedule.assignments.find(agent.id);
    if (it == schedule.assignments.end() || it->second.empty()) continue;
    TestPlan plan{agent.id, cycle, agent.budget, {}};
    for (const auto& test_id : it->second) {
      const auto* p = by_id.at(test_id);
      plan.entries.push_back({test_id, p->test.avg_duration, p->priority});
    }
    std::stable_sort(plan.entries.begin(), plan.entries.end(),
                     [](const PlanEntry& a, const PlanEntry& b) { return a.priority > b.priority; });
    plans.push_back(std::move(plan));
  }
  return plans;
}

namespace {

void require_version(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw FormatError(std::string(what) + " lacks format_version");
  }
  if (j.at("format_version") != kFormatVersion) {
    throw FormatError(std::string(what) + " has unsupported format_version " +
                      j.at("format_version").dump());
  }
}

template <typename T>
T field(const json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(what) + " field '" + key + "' is missing or malformed");
  }
}

}  // namespace

json to_json(const TestPlan& plan) {
  json entries = json::array();
  for (const auto& e : plan.entries) {
    entries.push_back(
        {{"test_id", e.test_id}, {"planned_duration", e.planned_duration}, {"priority", e.priority}});
  }
  return json{{"format_version", kFormatVersion},
              {"agent_id", plan.agent_id},
              {"cycle", plan.cycle},
              {"budget", plan.budget},
              {"entries", std::move(entries)}};
}

TestPlan test_plan_from_json(const json& j) {
  require_version(j, "test plan");
  TestPlan plan;
  plan.agent_id = field<std::string>(j, "agent_id", "test plan");
  plan.cycle = field<int>(j, "cycle", "test plan");
  plan.budget = field<double>(j, "budget", "test plan");
  for (const auto& e : field<json>(j, "entries", "test plan")) {
    plan.entries.push_back({field<std::string>(e, "test_id", "plan entry"),
                            field<double>(e, "planned_duration", "plan entry"),
                            field<double>(e, "priority", "plan entry")});
  }
  return plan;
}

json to_json(const AgentResult& result) {
  json records = json::array();
  for (const auto& r : result.records) records.push_back(to_json(r));
  return json{{"format_version", kFormatVersion},
              {"agent_id", result.agent_id},
              {"cycle", result.cycle},
              {"records", std::move(records)},
              {"log_lines", result.log_lines}};
}

AgentResult agent_result_from_json(const json& j) {
  require_version(j, "agent result");
  AgentResult result;
  result.agent_id = field<std::string>(j, "agent_id", "agent result");
  result.cycle = field<int>(j, "cycle", "agent result");
  for (const auto& r : field<json>(j, "records", "agent result")) {
    result.records.push_back(execution_record_from_json(r));
  }
  result.log_lines = field<std::vector<std::string>>(j, "log_lines", "agent result");
  return result;
}

json to_json(const OutcomeModel& model) {
  return json{{"format_version", kFormatVersion},
              {"defect_probability", model.defect_probability},
              {"default_defect_probability", model.default_defect_probability},
              {"jitter_lo", model.jitter_lo},
              {"jitter_hi", model.jitter_hi},
              {"seed", model.seed}};
}

OutcomeModel outcome_model_from_json(const json& j) {
  if (j.contains("format_version") && j.at("format_version") != kFormatVersion) {
    throw FormatError("outcome model has unsupported format_version " + j.at("format_version").dump());
  }
  OutcomeModel m;
  if (j.contains("defect_probability")) {
    m.defect_probability = field<std::map<std::string, double>>(j, "defect_probability", "outcome model");
  }
  if (j.contains("default_defect_probability")) {
    m.default_defect_probability = field<double>(j, "default_defect_probability", "outcome model");
  }
  if (j.contains("jitter_lo")) m.jitter_lo = field<double>(j, "jitter_lo", "outcome model");
  if (j.contains("jitter_hi")) m.jitter_hi = field<double>(j, "jitter_hi", "outcome model");
  if (j.contains("seed")) m.seed = field<std::uint64_t>(j, "seed", "outcome model");
  if (auto problem = m.check(); !problem.empty()) throw FormatError(problem);
  return m;
}

std::filesystem::path plan_path(const std::filesystem::path& out, int cycle, const std::string& agent_id) {
  return out / ("cycle_" + std::to_string(cycle)) / ("plan_" + agent_id + ".json");
}

std::filesystem::path result_path(const std::filesystem::path& out, int cycle, const std::string& agent_id) {
  return out / ("cycle_" + std::to_string(cycle)) / ("result_" + agent_id + ".json");
}

std::uint64_t execution_seed(std::uint64_t seed, const std::string& agent_id, int cycle,
                             const std::string& test_id) {
  // FNV-1a over the key fields, folded with the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  auto mix = [&h](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  mix(agent_id);
  mix(std::to_string(cycle));
  mix(test_id);
  return h;
}

namespace {

double unit_draw(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace

AgentResult execute_plan(const TestPlan& plan, const OutcomeModel& model) {
  AgentResult result{plan.agent_id, plan.cycle, {}, {}};
  for (const auto& entry : plan.entries) {
    std::mt19937_64 engine(execution_seed(model.seed, plan.agent_id, plan.cycle, entry.test_id));
    const double fail_draw = unit_draw(engine);
    const double jitter_draw = unit_draw(engine);
    const Outcome outcome =
        fail_draw < model.probability_for(entry.test_id) ? Outcome::Fail : Outcome::Pass;
    const double factor = model.jitter_lo + (model.jitter_hi - model.jitter_lo) * jitter_draw;
    const double actual = entry.planned_duration * factor;
    result.records.push_back({entry.test_id, plan.agent_id, plan.cycle, outcome, actual});

    char line[256];
    std::snprintf(line, sizeof line, "cycle=%d agent=%s test=%s outcome=%s duration=%.3f",
                  plan.cycle, plan.agent_id.c_str(), entry.test_id.c_str(), to_string(outcome),
                  actual);
    result.log_lines.emplace_back(line);
  }
  return result;
}

void collect_results(std::span<const AgentResult> results, HistoryStore& history) {
  const int cycle = history.current_cycle();
  std::set<std::string> incoming;
  for (const auto& result : results) {
    for (const auto& r : result.records) {
      if (r.cycle != cycle || result.cycle != cycle) {
        throw FormatError("result for test '" + r.test_id + "' belongs to cycle " +
                          std::to_string(r.cycle) + ", expected " + std::to_string(cycle));
      }
      if (!(r.actual_duration > 0.0)) {
        throw FormatError("result for test '" + r.test_id + "' has non-positive duration");
      }
      if (!incoming.insert(r.test_id).second || history.contains(r.test_id, cycle)) {
        throw DuplicateRecordError(r.test_id, cycle);
      }
    }
  }
  for (const auto& result : results) {
    for (const auto& r : result.records) history.append(r);
  }
  history.advance_cycle();
}

}  // namespace testsched
