#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "testsched/prioritizer.hpp"
#include "testsched/scheduler.hpp"

namespace testsched {

inline constexpr int kHistogramBins = 20;

struct TimelineEntry {
  std::string test_id;
  double start = 0.0;  // offset from cycle start, planned durations
  double planned_duration = 0.0;
  double actual_duration = 0.0;
  bool failed = false;

  friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

struct AgentTimeline {
  std::string agent_id;
  double budget = 0.0;
  std::vector<TimelineEntry> entries;

  friend bool operator==(const AgentTimeline&, const AgentTimeline&) = default;
};

struct CycleReport {
  int cycle = 0;
  std::string scheduler;
  std::map<std::string, double> per_agent_utilization;
  double overall_utilization = 0.0;
  /// Same ratio over measured durations; may exceed 1 when tests overrun.
  double actual_utilization = 0.0;
  int eligible_count = 0;
  int ineligible_count = 0;  // active or not, filtered before prioritization
  int scheduled_count = 0;
  int executed_count = 0;
  int fail_count = 0;
  int dropped_tests = 0;  // eligible but unscheduled
  int overrun_agents = 0;
  std::vector<int> priority_histogram = std::vector<int>(kHistogramBins, 0);
  double total_priority = 0.0;
  double diversity = 0.0;
  double used_time = 0.0;
  std::int64_t solver_nodes = 0;
  bool solver_complete = true;
  /// Wall-clock time spent scheduling. Kept out of report.json so report
  /// files stay reproducible; see timing.jsonl.
  double solver_wall_time_ms = 0.0;
  std::vector<AgentTimeline> timeline;

  friend bool operator==(const CycleReport&, const CycleReport&) = default;
};

struct Utilization {
  std::map<std::string, double> per_agent;
  double overall = 0.0;
};

/// Planned (packed) time over budget, per agent and budget-weighted overall.
Utilization utilization(const Schedule& schedule, std::span<const PrioritizedTest> prioritized,
                        std::span<const TestAgent> agents);

/// Equal-width bins over [0, 1]; bins are left-closed except the last,
/// which also holds 1.0.
std::vector<int> priority_histogram(std::span<const PrioritizedTest> prioritized,
                                    int bins = kHistogramBins);
std::vector<int> priority_histogram(std::span<const double> priorities, int bins = kHistogramBins);

struct CampaignSummary {
  int cycles = 0;
  double min_utilization = 0.0;
  double median_utilization = 0.0;
  double max_utilization = 0.0;
  double fraction_at_least_91 = 0.0;
  double fraction_at_least_99 = 0.0;
  std::vector<int> priority_histogram;
  int total_failures = 0;
};

/// Throws EmptyCampaignError.
CampaignSummary campaign_summary(std::span<const CycleReport> reports);

nlohmann::json to_json(const CycleReport& report);
CycleReport cycle_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CampaignSummary& summary);

std::filesystem::path report_path(const std::filesystem::path& out, int cycle);
/// Every cycle_<n>/report.json under `dir`, by cycle.
std::vector<CycleReport> load_reports(const std::filesystem::path& dir);

/// utilization.csv, priority_histogram.csv and timeline.csv.
std::vector<std::filesystem::path> export_plot_data(std::span<const CycleReport> reports,
                                                    const std::filesystem::path& out_dir);
/// The same three tables as one JSON document, plot_data.json.
std::filesystem::path export_plot_json(std::span<const CycleReport> reports,
                                       const std::filesystem::path& out_dir);

}  // namespace testsched
