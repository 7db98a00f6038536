#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace testsched {

struct TestCase {
  std::string id;
  double avg_duration = 0.0;  // seconds
  double static_priority = 0.0;
  std::set<std::string> compatible_agents;
  bool obligatory = false;
  bool active = true;

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

struct TestAgent {
  std::string id;
  double budget = 0.0;  // seconds per cycle
  std::set<std::string> capabilities;
  bool active = true;

  friend bool operator==(const TestAgent&, const TestAgent&) = default;
};

struct Repository {
  std::vector<TestCase> tests;
  std::vector<TestAgent> agents;

  friend bool operator==(const Repository&, const Repository&) = default;
};

enum class Outcome { Pass, Fail };

const char* to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& text);

struct ExecutionRecord {
  std::string test_id;
  std::string agent_id;
  int cycle = 0;
  Outcome outcome = Outcome::Pass;
  double actual_duration = 0.0;

  friend bool operator==(const ExecutionRecord&, const ExecutionRecord&) = default;
};

/// Append-only execution log. Records are kept in non-decreasing cycle order
/// and a test appears at most once per cycle.
class HistoryStore {
 public:
  HistoryStore() = default;

  int current_cycle() const noexcept { return current_cycle_; }
  const std::vector<ExecutionRecord>& records() const noexcept { return records_; }

  /// Throws DuplicateRecordError or FormatError when an invariant would break.
  void append(ExecutionRecord record);
  void advance_cycle();
  /// Moves the cycle counter forward (never backwards).
  void set_current_cycle(int cycle);

  bool contains(const std::string& test_id, int cycle) const;

  /// Records for one test, newest first.
  std::vector<const ExecutionRecord*> records_for(const std::string& test_id) const;
  std::optional<int> last_execution_cycle(const std::string& test_id) const;

  /// Last cycle each (test, agent) pair ran.
  std::map<std::pair<std::string, std::string>, int> pair_last_cycle() const;

  friend bool operator==(const HistoryStore& a, const HistoryStore& b) {
    return a.current_cycle_ == b.current_cycle_ && a.records_ == b.records_;
  }

 private:
  std::vector<ExecutionRecord> records_;
  std::map<std::string, std::vector<std::size_t>> by_test_;
  int current_cycle_ = 0;
};

enum class ViolationKind {
  DuplicateId,
  EmptyCompatibility,
  NonPositiveDuration,
  NonPositiveBudget,
  StaticPriorityOutOfRange,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string id;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationResult validate_repository(std::span<const TestCase> tests,
                                     std::span<const TestAgent> agents);

struct EligibleSet {
  std::vector<TestCase> tests;
  std::vector<TestAgent> agents;
};

/// Keeps active agents, and active tests with at least one active compatible
/// agent. Input order is preserved.
EligibleSet filter_eligible(std::span<const TestCase> tests, std::span<const TestAgent> agents);

}  // namespace testsched
