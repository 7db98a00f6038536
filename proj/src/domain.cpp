#include "testsched/domain.hpp"

#include <algorithm>
#include <unordered_set>

#include "testsched/errors.hpp"

namespace testsched {

const char* to_string(Outcome outcome) {
  return outcome == Outcome::Pass ? "Pass" : "Fail";
}

Outcome outcome_from_string(const std::string& text) {
  if (text == "Pass") return Outcome::Pass;
  if (text == "Fail") return Outcome::Fail;
  throw FormatError("unknown outcome '" + text + "'");
}

void HistoryStore::append(ExecutionRecord record) {
  if (!(record.actual_duration > 0.0)) {
    throw FormatError("record for test '" + record.test_id + "' has non-positive duration");
  }
  if (record.cycle < 0) {
    throw FormatError("record for test '" + record.test_id + "' has negative cycle");
  }
  if (!records_.empty() && record.cycle < records_.back().cycle) {
    throw FormatError("records must be appended in non-decreasing cycle order");
  }
  if (contains(record.test_id, record.cycle)) {
    throw DuplicateRecordError(record.test_id, record.cycle);
  }
  by_test_[record.test_id].push_back(records_.size());
  records_.push_back(std::move(record));
}

void HistoryStore::advance_cycle() { ++current_cycle_; }

void HistoryStore::set_current_cycle(int cycle) {
  current_cycle_ = std::max(current_cycle_, cycle);
}

bool HistoryStore::contains(const std::string& test_id, int cycle) const {
  auto it = by_test_.find(test_id);
  if (it == by_test_.end()) return false;
  // Per-test indices are in cycle order, so only the newest can clash.
  return !it->second.empty() && records_[it->second.back()].cycle == cycle;
}

std::vector<const ExecutionRecord*> HistoryStore::records_for(const std::string& test_id) const {
  std::vector<const ExecutionRecord*> out;
  auto it = by_test_.find(test_id);
  if (it == by_test_.end()) return out;
  out.reserve(it->second.size());
  for (auto idx = it->second.rbegin(); idx != it->second.rend(); ++idx) {
    out.push_back(&records_[*idx]);
  }
  return out;
}

std::optional<int> HistoryStore::last_execution_cycle(const std::string& test_id) const {
  auto it = by_test_.find(test_id);
  if (it == by_test_.end() || it->second.empty()) return std::nullopt;
  return records_[it->second.back()].cycle;
}

std::map<std::pair<std::string, std::string>, int> HistoryStore::pair_last_cycle() const {
  std::map<std::pair<std::string, std::string>, int> out;
  for (const auto& r : records_) {
    auto& slot = out[{r.test_id, r.agent_id}];
    slot = std::max(slot, r.cycle);
  }
  return out;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::EmptyCompatibility: return "EmptyCompatibility";
    case ViolationKind::NonPositiveDuration: return "NonPositiveDuration";
    case ViolationKind::NonPositiveBudget: return "NonPositiveBudget";
    case ViolationKind::StaticPriorityOutOfRange: return "StaticPriorityOutOfRange";
  }
  return "Unknown";
}

ValidationResult validate_repository(std::span<const TestCase> tests,
                                     std::span<const TestAgent> agents) {
  ValidationResult result;
  auto add = [&](ViolationKind kind, const std::string& id) {
    result.violations.push_back({kind, id});
  };

  std::unordered_set<std::string> seen_tests;
  for (const auto& t : tests) {
    if (!seen_tests.insert(t.id).second) add(ViolationKind::DuplicateId, t.id);
    if (!(t.avg_duration > 0.0)) add(ViolationKind::NonPositiveDuration, t.id);
    if (t.compatible_agents.empty()) add(ViolationKind::EmptyCompatibility, t.id);
    if (!(t.static_priority >= 0.0 && t.static_priority <= 1.0)) {
      add(ViolationKind::StaticPriorityOutOfRange, t.id);
    }
  }
  std::unordered_set<std::string> seen_agents;
  for (const auto& a : agents) {
    if (!seen_agents.insert(a.id).second) add(ViolationKind::DuplicateId, a.id);
    if (!(a.budget > 0.0)) add(ViolationKind::NonPositiveBudget, a.id);
  }
  return result;
}

EligibleSet filter_eligible(std::span<const TestCase> tests, std::span<const TestAgent> agents) {
  EligibleSet out;
  std::unordered_set<std::string> active_ids;
  for (const auto& a : agents) {
    if (a.active) {
      out.agents.push_back(a);
      active_ids.insert(a.id);
    }
  }
  for (const auto& t : tests) {
    if (!t.active) continue;
    bool reachable = std::any_of(t.compatible_agents.begin(), t.compatible_agents.end(),
                                 [&](const std::string& id) { return active_ids.contains(id); });
    if (reachable) out.tests.push_back(t);
  }
  return out;
}

}  // namespace testsched
