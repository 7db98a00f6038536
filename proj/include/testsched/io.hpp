#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "testsched/domain.hpp"

namespace testsched {

inline constexpr int kFormatVersion = 1;

nlohmann::json to_json(const TestCase& test);
nlohmann::json to_json(const TestAgent& agent);
nlohmann::json to_json(const Repository& repo);
nlohmann::json to_json(const ExecutionRecord& record);

TestCase test_case_from_json(const nlohmann::json& j);
TestAgent test_agent_from_json(const nlohmann::json& j);
Repository repository_from_json(const nlohmann::json& j);
ExecutionRecord execution_record_from_json(const nlohmann::json& j);

Repository load_repository(const std::filesystem::path& path);
void save_repository(const Repository& repo, const std::filesystem::path& path);

/// History log: one JSON object per line. Record lines carry
/// `"kind": "record"`; a `"kind": "cycle_end"` line closes each cycle so the
/// cycle counter survives cycles that executed nothing. A missing file reads
/// as an empty history.
HistoryStore load_history(const std::filesystem::path& path);
void save_history(const HistoryStore& history, const std::filesystem::path& path);
/// Appends the records of `cycle` and its cycle_end marker.
void append_history_cycle(const HistoryStore& history, int cycle,
                          const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a sibling temporary and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace testsched
