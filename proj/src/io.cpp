#include "testsched/io.hpp"

#include <fstream>
#include <sstream>

#include "testsched/errors.hpp"

namespace testsched {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string(what) + " is missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(what) + " field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback, const char* what) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(what) + " field '" + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const TestCase& t) {
  return json{{"id", t.id},
              {"avg_duration", t.avg_duration},
              {"static_priority", t.static_priority},
              {"compatible_agents", t.compatible_agents},
              {"obligatory", t.obligatory},
              {"active", t.active}};
}

json to_json(const TestAgent& a) {
  return json{{"id", a.id}, {"budget", a.budget}, {"capabilities", a.capabilities}, {"active", a.active}};
}

json to_json(const Repository& repo) {
  json tests = json::array();
  for (const auto& t : repo.tests) tests.push_back(to_json(t));
  json agents = json::array();
  for (const auto& a : repo.agents) agents.push_back(to_json(a));
  return json{{"format_version", kFormatVersion}, {"tests", std::move(tests)}, {"agents", std::move(agents)}};
}

json to_json(const ExecutionRecord& r) {
  return json{{"test_id", r.test_id},
              {"agent_id", r.agent_id},
              {"cycle", r.cycle},
              {"outcome", to_string(r.outcome)},
              {"actual_duration", r.actual_duration}};
}

TestCase test_case_from_json(const json& j) {
  TestCase t;
  t.id = required<std::string>(j, "id", "test");
  t.avg_duration = required<double>(j, "avg_duration", "test");
  t.static_priority = optional_field<double>(j, "static_priority", 0.0, "test");
  t.compatible_agents = required<std::set<std::string>>(j, "compatible_agents", "test");
  t.obligatory = optional_field<bool>(j, "obligatory", false, "test");
  t.active = optional_field<bool>(j, "active", true, "test");
  return t;
}

TestAgent test_agent_from_json(const json& j) {
  TestAgent a;
  a.id = required<std::string>(j, "id", "agent");
  a.budget = required<double>(j, "budget", "agent");
  a.capabilities = optional_field<std::set<std::string>>(j, "capabilities", {}, "agent");
  a.active = optional_field<bool>(j, "active", true, "agent");
  return a;
}

Repository repository_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("repository must be a JSON object");
  // Hand-written repositories may omit the version.
  if (j.contains("format_version") && j.at("format_version") != kFormatVersion) {
    throw FormatError("repository has unsupported format_version " + j.at("format_version").dump());
  }
  Repository repo;
  for (const char* key : {"tests", "agents"}) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw FormatError(std::string("repository needs a top-level array '") + key + "'");
    }
  }
  for (const auto& t : j.at("tests")) repo.tests.push_back(test_case_from_json(t));
  for (const auto& a : j.at("agents")) repo.agents.push_back(test_agent_from_json(a));
  return repo;
}

ExecutionRecord execution_record_from_json(const json& j) {
  ExecutionRecord r;
  r.test_id = required<std::string>(j, "test_id", "record");
  r.agent_id = required<std::string>(j, "agent_id", "record");
  r.cycle = required<int>(j, "cycle", "record");
  r.outcome = outcome_from_string(required<std::string>(j, "outcome", "record"));
  r.actual_duration = required<double>(j, "actual_duration", "record");
  return r;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

json read_json_file(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

Repository load_repository(const std::filesystem::path& path) {
  return repository_from_json(read_json_file(path));
}

void save_repository(const Repository& repo, const std::filesystem::path& path) {
  write_json_file(path, to_json(repo));
}

namespace {

std::string record_line(const ExecutionRecord& r) {
  json j = to_json(r);
  j["kind"] = "record";
  return j.dump() + "\n";
}

std::string cycle_end_line(int cycle) {
  return json{{"kind", "cycle_end"}, {"cycle", cycle}}.dump() + "\n";
}

}  // namespace

HistoryStore load_history(const std::filesystem::path& path) {
  HistoryStore history;
  if (!std::filesystem::exists(path)) return history;
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      // A torn final line from an interrupted append is dropped.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    auto kind = optional_field<std::string>(j, "kind", "record", "history line");
    if (kind == "cycle_end") {
      history.set_current_cycle(required<int>(j, "cycle", "history line") + 1);
    } else if (kind == "record") {
      auto record = execution_record_from_json(j);
      history.set_current_cycle(record.cycle);
      history.append(std::move(record));
    } else {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
  }
  // Records of an unterminated cycle still count as executed.
  if (!history.records().empty()) history.set_current_cycle(history.records().back().cycle + 1);
  return history;
}

void save_history(const HistoryStore& history, const std::filesystem::path& path) {
  std::string text;
  std::size_t i = 0;
  const auto& records = history.records();
  for (int cycle = 0; cycle < history.current_cycle(); ++cycle) {
    for (; i < records.size() && records[i].cycle == cycle; ++i) text += record_line(records[i]);
    text += cycle_end_line(cycle);
  }
  for (; i < records.size(); ++i) text += record_line(records[i]);
  write_text_file(path, text);
}

void append_history_cycle(const HistoryStore& history, int cycle, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : history.records()) {
    if (r.cycle == cycle) text += record_line(r);
  }
  text += cycle_end_line(cycle);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open '" + path.string() + "' for appending");
  out << text;
  out.flush();
  if (!out) throw IoError("append to '" + path.string() + "' failed");
}

}  // namespace testsched
