#include "testsched/config.hpp"

#include <cmath>
#include <filesystem>

#include "testsched/io.hpp"

namespace testsched {

using nlohmann::json;

json to_json(const RunConfig& c) {
  const auto& p = c.priority;
  const auto& s = c.solver;
  const auto& sim = c.simulation;
  const auto& w = c.workload;
  return json{
      {"priority",
       {{"w_staleness", p.w_staleness},
        {"w_duration", p.w_duration},
        {"w_results", p.w_results},
        {"w_static", p.w_static},
        {"history_window", p.history_window},
        {"decay", p.decay},
        {"staleness_cap", p.staleness_cap},
        {"prefer_short", p.prefer_short}}},
      {"solver",
       {{"time_budget_ms", s.time_budget_ms},
        {"staleness_cap", s.staleness_cap},
        {"diversity", s.diversity},
        {"node_limit", s.node_limit}}},
      {"simulation",
       {{"cycles", sim.cycles},
        {"scheduler", to_string(sim.scheduler)},
        {"seed", sim.seed},
        {"default_defect_probability", sim.default_defect_probability},
        {"jitter_lo", sim.jitter_lo},
        {"jitter_hi", sim.jitter_hi}}},
      {"workload",
       {{"test_count", w.test_count},
        {"agent_count", w.agent_count},
        {"min_duration", w.min_duration},
        {"max_duration", w.max_duration},
        {"compatibility_density", w.compatibility_density},
        {"obligatory_fraction", w.obligatory_fraction},
        {"min_defect_probability", w.min_defect_probability},
        {"max_defect_probability", w.max_defect_probability},
        {"budget", w.budget},
        {"jitter_lo", w.jitter_lo},
        {"jitter_hi", w.jitter_hi},
        {"seed", w.seed}}},
  };
}

namespace {

bool same_kind(const json& expected, const json& value) {
  if (expected.is_boolean()) return value.is_boolean();
  if (expected.is_string()) return value.is_string();
  if (expected.is_number_integer()) {
    return value.is_number_integer() || (value.is_number_float() && value.get<double>() == std::floor(value.get<double>()));
  }
  if (expected.is_number()) return value.is_number();
  return false;
}

json coerce(const json& expected, const json& value) {
  if (expected.is_number_unsigned()) return json(value.get<std::uint64_t>());
  if (expected.is_number_integer()) return json(value.get<std::int64_t>());
  if (expected.is_number_float()) return json(value.get<double>());
  return value;
}

void set_key(json& doc, const std::string& section, const std::string& key, const json& value,
             const std::string& origin) {
  const std::string name = section + "." + key;
  if (!doc.contains(section)) throw ConfigError("UnknownKey", origin + ": unknown section '" + section + "'");
  auto& sec = doc[section];
  if (!sec.contains(key)) throw ConfigError("UnknownKey", origin + ": unknown key '" + name + "'");
  if (!same_kind(sec[key], value)) {
    throw ConfigError("TypeMismatch", origin + ": '" + name + "' expects " +
                                          std::string(sec[key].type_name()) + ", got " + value.dump());
  }
  if (sec[key].is_number_unsigned() && value.is_number() && value.get<double>() < 0) {
    throw ConfigError("TypeMismatch", origin + ": '" + name + "' must be non-negative");
  }
  sec[key] = coerce(sec[key], value);
}

template <typename T>
void read(const json& sec, const char* key, T& out) {
  out = sec.at(key).get<T>();
}

RunConfig from_document(const json& doc) {
  RunConfig c;
  const auto& p = doc.at("priority");
  read(p, "w_staleness", c.priority.w_staleness);
  read(p, "w_duration", c.priority.w_duration);
  read(p, "w_results", c.priority.w_results);
  read(p, "w_static", c.priority.w_static);
  read(p, "history_window", c.priority.history_window);
  read(p, "decay", c.priority.decay);
  read(p, "staleness_cap", c.priority.staleness_cap);
  read(p, "prefer_short", c.priority.prefer_short);

  const auto& s = doc.at("solver");
  read(s, "time_budget_ms", c.solver.time_budget_ms);
  read(s, "staleness_cap", c.solver.staleness_cap);
  read(s, "diversity", c.solver.diversity);
  read(s, "node_limit", c.solver.node_limit);

  const auto& sim = doc.at("simulation");
  read(sim, "cycles", c.simulation.cycles);
  try {
    c.simulation.scheduler = scheduler_kind_from_string(sim.at("scheduler").get<std::string>());
  } catch (const FormatError& e) {
    throw ConfigError("InvalidValue", e.what());
  }
  read(sim, "seed", c.simulation.seed);
  read(sim, "default_defect_probability", c.simulation.default_defect_probability);
  read(sim, "jitter_lo", c.simulation.jitter_lo);
  read(sim, "jitter_hi", c.simulation.jitter_hi);

  const auto& w = doc.at("workload");
  read(w, "test_count", c.workload.test_count);
  read(w, "agent_count", c.workload.agent_count);
  read(w, "min_duration", c.workload.min_duration);
  read(w, "max_duration", c.workload.max_duration);
  read(w, "compatibility_density", c.workload.compatibility_density);
  read(w, "obligatory_fraction", c.workload.obligatory_fraction);
  read(w, "min_defect_probability", c.workload.min_defect_probability);
  read(w, "max_defect_probability", c.workload.max_defect_probability);
  read(w, "budget", c.workload.budget);
  read(w, "jitter_lo", c.workload.jitter_lo);
  read(w, "jitter_hi", c.workload.jitter_hi);
  read(w, "seed", c.workload.seed);
  return c;
}

void check(const RunConfig& c) {
  if (auto p = c.priority.check(); !p.empty()) throw ConfigError("InvalidValue", "priority: " + p);
  if (c.solver.time_budget_ms < 1) throw ConfigError("InvalidValue", "solver.time_budget_ms must be positive");
  if (c.solver.staleness_cap < 1) throw ConfigError("InvalidValue", "solver.staleness_cap must be at least 1");
  if (c.solver.node_limit < 0) throw ConfigError("InvalidValue", "solver.node_limit must be non-negative");
  if (c.simulation.cycles < 1) throw ConfigError("InvalidValue", "simulation.cycles must be at least 1");
  if (auto p = outcome_model_for(c).check(); !p.empty()) throw ConfigError("InvalidValue", "simulation: " + p);
  if (auto p = c.workload.check(); !p.empty()) throw ConfigError("InvalidValue", "workload: " + p);
}

json parse_flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

}  // namespace

RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const std::vector<ConfigFlag>& flags, std::optional<std::uint64_t> seed) {
  json doc = to_json(RunConfig{});

  if (file) {
    if (!std::filesystem::exists(*file)) {
      throw ConfigError("MissingFile", "config file '" + file->string() + "' does not exist");
    }
    json loaded;
    try {
      loaded = json::parse(read_text_file(*file));
    } catch (const json::parse_error& e) {
      throw ConfigError("TypeMismatch", "config file '" + file->string() + "' is not valid JSON: " + e.what());
    }
    if (!loaded.is_object()) throw ConfigError("TypeMismatch", "config file must hold a JSON object");
    for (const auto& [section, values] : loaded.items()) {
      if (!doc.contains(section)) throw ConfigError("UnknownKey", file->string() + ": unknown section '" + section + "'");
      if (!values.is_object()) throw ConfigError("TypeMismatch", file->string() + ": section '" + section + "' must be an object");
      for (const auto& [key, value] : values.items()) set_key(doc, section, key, value, file->string());
    }
  }

  for (const auto& [name, text] : flags) {
    auto dot = name.find('.');
    if (dot == std::string::npos) throw ConfigError("UnknownKey", "flag '" + name + "' must look like section.key");
    set_key(doc, name.substr(0, dot), name.substr(dot + 1), parse_flag_value(text), "flag");
  }

  if (seed) {
    doc["simulation"]["seed"] = *seed;
    doc["workload"]["seed"] = *seed;
  }

  RunConfig config;
  try {
    config = from_document(doc);
  } catch (const json::exception& e) {
    throw ConfigError("TypeMismatch", e.what());
  }
  check(config);
  return config;
}

WorkloadSpec workload_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("TypeMismatch", "workload must be a JSON object");
  json doc = to_json(RunConfig{});
  for (const auto& [key, value] : j.items()) set_key(doc, "workload", key, value, "workload");
  auto spec = from_document(doc).workload;
  if (auto p = spec.check(); !p.empty()) throw ConfigError("InvalidValue", "workload: " + p);
  return spec;
}

OutcomeModel outcome_model_for(const RunConfig& config) {
  OutcomeModel m;
  m.default_defect_probability = config.simulation.default_defect_probability;
  m.jitter_lo = config.simulation.jitter_lo;
  m.jitter_hi = config.simulation.jitter_hi;
  m.seed = config.simulation.seed;
  return m;
}

SimulationConfig simulation_config_for(const RunConfig& config, OutcomeModel outcome,
                                       std::filesystem::path out_dir) {
  SimulationConfig sim;
  sim.cycles = config.simulation.cycles;
  sim.scheduler = config.simulation.scheduler;
  sim.weights = config.priority;
  sim.outcome = std::move(outcome);
  sim.solver = config.solver;
  sim.out_dir = std::move(out_dir);
  return sim;
}

}  // namespace testsched
