#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace testsched {

/// Base of every domain error. `code()` is the stable machine-readable name
/// written to the error stream by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Obligatory tests that could not be placed on any compatible agent.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::vector<std::string> test_ids, const std::string& message)
      : Error("Infeasible", message), test_ids_(std::move(test_ids)) {}

  const std::vector<std::string>& test_ids() const noexcept { return test_ids_; }

 private:
  std::vector<std::string> test_ids_;
};

class InstanceTooLargeError : public Error {
 public:
  explicit InstanceTooLargeError(const std::string& message)
      : Error("InstanceTooLarge", message) {}
};

class DuplicateRecordError : public Error {
 public:
  DuplicateRecordError(std::string test_id, int cycle)
      : Error("DuplicateRecord", "duplicate record for test '" + test_id +
                                     "' in cycle " + std::to_string(cycle)),
        test_id_(std::move(test_id)),
        cycle_(cycle) {}

  const std::string& test_id() const noexcept { return test_id_; }
  int cycle() const noexcept { return cycle_; }

 private:
  std::string test_id_;
  int cycle_;
};

class EmptyCampaignError : public Error {
 public:
  EmptyCampaignError() : Error("EmptyCampaign", "campaign contains no cycle reports") {}
};

/// Malformed input files (repository, history, plans, results).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("FormatError", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace testsched
