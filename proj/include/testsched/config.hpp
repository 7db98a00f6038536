#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "testsched/errors.hpp"
#include "testsched/prioritizer.hpp"
#include "testsched/simulator.hpp"

namespace testsched {

/// code() is one of UnknownKey, TypeMismatch, MissingFile, InvalidValue.
class ConfigError : public Error {
 public:
  ConfigError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

struct SimulationSettings {
  int cycles = 87;
  SchedulerKind scheduler = SchedulerKind::Optimal;
  std::uint64_t seed = 1;
  double default_defect_probability = 0.1;
  double jitter_lo = 0.9;
  double jitter_hi = 1.1;
};

/// Sections "priority", "solver", "simulation" and "workload".
struct RunConfig {
  PriorityWeights priority;
  SolverSettings solver;
  SimulationSettings simulation;
  WorkloadSpec workload;
};

/// A `section.key` override; the value is parsed as JSON when possible and
/// taken as a plain string otherwise.
using ConfigFlag = std::pair<std::string, std::string>;

nlohmann::json to_json(const RunConfig& config);

/// defaults <- file <- flags. The file is a JSON object of sections.
/// `seed`, when set, replaces every configured seed last.
RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const std::vector<ConfigFlag>& flags,
                       std::optional<std::uint64_t> seed = std::nullopt);

/// WorkloadSpec from a standalone JSON object (the "workload" section shape).
WorkloadSpec workload_spec_from_json(const nlohmann::json& j);

/// Outcome model used when running against a repository without a workload.
OutcomeModel outcome_model_for(const RunConfig& config);

SimulationConfig simulation_config_for(const RunConfig& config, OutcomeModel outcome,
                                       std::filesystem::path out_dir);

}  // namespace testsched
