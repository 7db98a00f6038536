#include "testsched/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>
#include <unordered_map>

#include "testsched/errors.hpp"
#include "testsched/io.hpp"

namespace testsched {

using nlohmann::json;

Utilization utilization(const Schedule& schedule, std::span<const PrioritizedTest> prioritized,
                        std::span<const TestAgent> agents) {
  std::unordered_map<std::string, std::int64_t> dur;
  for (const auto& p : prioritized) dur.emplace(p.test.id, duration_ms(p.test.avg_duration));

  Utilization u;
  std::int64_t used_total = 0;
  std::int64_t budget_total = 0;
  for (const auto& agent : agents) {
    std::int64_t used = 0;
    if (auto it = schedule.assignments.find(agent.id); it != schedule.assignments.end()) {
      for (const auto& id : it->second) used += dur.at(id);
    }
    const auto budget = budget_ms(agent.budget);
    u.per_agent[agent.id] = budget > 0 ? static_cast<double>(used) / budget : 0.0;
    used_total += used;
    budget_total += budget;
  }
  u.overall = budget_total > 0 ? static_cast<double>(used_total) / budget_total : 0.0;
  return u;
}

std::vector<int> priority_histogram(std::span<const double> priorities, int bins) {
  std::vector<int> counts(static_cast<std::size_t>(std::max(bins, 1)), 0);
  const int last = static_cast<int>(counts.size()) - 1;
  for (double p : priorities) {
    int bin = static_cast<int>(std::floor(std::clamp(p, 0.0, 1.0) * counts.size()));
    ++counts[std::clamp(bin, 0, last)];
  }
  return counts;
}

std::vector<int> priority_histogram(std::span<const PrioritizedTest> prioritized, int bins) {
  std::vector<double> values;
  values.reserve(prioritized.size());
  for (const auto& p : prioritized) values.push_back(p.priority);
  return priority_histogram(values, bins);
}

CampaignSummary campaign_summary(std::span<const CycleReport> reports) {
  if (reports.empty()) throw EmptyCampaignError();
  CampaignSummary s;
  s.cycles = static_cast<int>(reports.size());
  std::vector<double> values;
  s.priority_histogram.assign(kHistogramBins, 0);
  int at_91 = 0;
  int at_99 = 0;
  for (const auto& r : reports) {
    values.push_back(r.overall_utilization);
    if (r.overall_utilization >= 0.91) ++at_91;
    if (r.overall_utilization >= 0.99) ++at_99;
    s.total_failures += r.fail_count;
    for (std::size_t b = 0; b < r.priority_histogram.size() && b < s.priority_histogram.size(); ++b) {
      s.priority_histogram[b] += r.priority_histogram[b];
    }
  }
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  s.min_utilization = values.front();
  s.max_utilization = values.back();
  s.median_utilization = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
  s.fraction_at_least_91 = static_cast<double>(at_91) / n;
  s.fraction_at_least_99 = static_cast<double>(at_99) / n;
  return s;
}

json to_json(const CycleReport& r) {
  json timeline = json::array();
  for (const auto& agent : r.timeline) {
    json entries = json::array();
    for (const auto& e : agent.entries) {
      entries.push_back({{"test_id", e.test_id},
                         {"start", e.start},
                         {"planned_duration", e.planned_duration},
                         {"actual_duration", e.actual_duration},
                         {"failed", e.failed}});
    }
    timeline.push_back({{"agent_id", agent.agent_id}, {"budget", agent.budget}, {"entries", std::move(entries)}});
  }
  return json{{"format_version", kFormatVersion},
              {"cycle", r.cycle},
              {"scheduler", r.scheduler},
              {"per_agent_utilization", r.per_agent_utilization},
              {"overall_utilization", r.overall_utilization},
              {"actual_utilization", r.actual_utilization},
              {"eligible_count", r.eligible_count},
              {"ineligible_count", r.ineligible_count},
              {"scheduled_count", r.scheduled_count},
              {"executed_count", r.executed_count},
              {"fail_count", r.fail_count},
              {"dropped_tests", r.dropped_tests},
              {"overrun_agents", r.overrun_agents},
              {"priority_histogram", r.priority_histogram},
              {"objective",
               {{"total_priority", r.total_priority}, {"diversity", r.diversity}, {"used_time", r.used_time}}},
              {"solver", {{"nodes", r.solver_nodes}, {"complete", r.solver_complete}}},
              {"timeline", std::move(timeline)}};
}

CycleReport cycle_report_from_json(const json& j) {
  try {
    if (j.at("format_version") != kFormatVersion) throw FormatError("unsupported report format_version");
    CycleReport r;
    r.cycle = j.at("cycle").get<int>();
    r.scheduler = j.at("scheduler").get<std::string>();
    r.per_agent_utilization = j.at("per_agent_utilization").get<std::map<std::string, double>>();
    r.overall_utilization = j.at("overall_utilization").get<double>();
    r.actual_utilization = j.at("actual_utilization").get<double>();
    r.eligible_count = j.at("eligible_count").get<int>();
    r.ineligible_count = j.at("ineligible_count").get<int>();
    r.scheduled_count = j.at("scheduled_count").get<int>();
    r.executed_count = j.at("executed_count").get<int>();
    r.fail_count = j.at("fail_count").get<int>();
    r.dropped_tests = j.at("dropped_tests").get<int>();
    r.overrun_agents = j.at("overrun_agents").get<int>();
    r.priority_histogram = j.at("priority_histogram").get<std::vector<int>>();
    const auto& obj = j.at("objective");
    r.total_priority = obj.at("total_priority").get<double>();
    r.diversity = obj.at("diversity").get<double>();
    r.used_time = obj.at("used_time").get<double>();
    r.solver_nodes = j.at("solver").at("nodes").get<std::int64_t>();
    r.solver_complete = j.at("solver").at("complete").get<bool>();
    for (const auto& a : j.at("timeline")) {
      AgentTimeline agent{a.at("agent_id").get<std::string>(), a.at("budget").get<double>(), {}};
      for (const auto& e : a.at("entries")) {
        agent.entries.push_back({e.at("test_id").get<std::string>(), e.at("start").get<double>(),
                                 e.at("planned_duration").get<double>(),
                                 e.at("actual_duration").get<double>(), e.at("failed").get<bool>()});
      }
      r.timeline.push_back(std::move(agent));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed cycle report: ") + e.what());
  }
}

json to_json(const CampaignSummary& s) {
  return json{{"format_version", kFormatVersion},
              {"cycles", s.cycles},
              {"min_utilization", s.min_utilization},
              {"median_utilization", s.median_utilization},
              {"max_utilization", s.max_utilization},
              {"fraction_at_least_91", s.fraction_at_least_91},
              {"fraction_at_least_99", s.fraction_at_least_99},
              {"priority_histogram", s.priority_histogram},
              {"total_failures", s.total_failures}};
}

std::filesystem::path report_path(const std::filesystem::path& out, int cycle) {
  return out / ("cycle_" + std::to_string(cycle)) / "report.json";
}

std::vector<CycleReport> load_reports(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  static const std::regex cycle_dir(R"(cycle_(\d+))");
  std::vector<CycleReport> reports;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    auto name = entry.path().filename().string();
    if (!entry.is_directory() || !std::regex_match(name, m, cycle_dir)) continue;
    auto file = entry.path() / "report.json";
    if (std::filesystem::exists(file)) reports.push_back(cycle_report_from_json(read_json_file(file)));
  }
  std::sort(reports.begin(), reports.end(),
            [](const CycleReport& a, const CycleReport& b) { return a.cycle < b.cycle; });
  return reports;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> agent_columns(std::span<const CycleReport> reports) {
  std::set<std::string> ids;
  for (const auto& r : reports) {
    for (const auto& [id, u] : r.per_agent_utilization) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

struct Tables {
  std::string utilization;
  std::string histogram;
  std::string timeline;
};

Tables build_tables(std::span<const CycleReport> reports) {
  Tables t;
  const auto agents = agent_columns(reports);
  t.utilization = "cycle,overall,actual_overall";
  for (const auto& id : agents) t.utilization += "," + id;
  t.utilization += "\n";
  for (const auto& r : reports) {
    t.utilization += std::to_string(r.cycle) + "," + num(r.overall_utilization) + "," +
                     num(r.actual_utilization);
    for (const auto& id : agents) {
      auto it = r.per_agent_utilization.find(id);
      t.utilization += ",";
      if (it != r.per_agent_utilization.end()) t.utilization += num(it->second);
    }
    t.utilization += "\n";
  }

  std::vector<long> bins(kHistogramBins, 0);
  for (const auto& r : reports) {
    for (std::size_t b = 0; b < r.priority_histogram.size() && b < bins.size(); ++b) {
      bins[b] += r.priority_histogram[b];
    }
  }
  t.histogram = "bin,lower,upper,count\n";
  for (int b = 0; b < kHistogramBins; ++b) {
    t.histogram += std::to_string(b) + "," + num(static_cast<double>(b) / kHistogramBins) + "," +
                   num(static_cast<double>(b + 1) / kHistogramBins) + "," + std::to_string(bins[b]) + "\n";
  }

  t.timeline = "cycle,agent,test,start,duration,actual_duration,outcome\n";
  for (const auto& r : reports) {
    for (const auto& agent : r.timeline) {
      for (const auto& e : agent.entries) {
        t.timeline += std::to_string(r.cycle) + "," + agent.agent_id + "," + e.test_id + "," +
                      num(e.start) + "," + num(e.planned_duration) + "," + num(e.actual_duration) +
                      "," + (e.failed ? "Fail" : "Pass") + "\n";
      }
    }
  }
  return t;
}

}  // namespace

std::vector<std::filesystem::path> export_plot_data(std::span<const CycleReport> reports,
                                                    const std::filesystem::path& out_dir) {
  if (reports.empty()) throw EmptyCampaignError();
  auto tables = build_tables(reports);
  std::vector<std::filesystem::path> paths = {out_dir / "utilization.csv",
                                              out_dir / "priority_histogram.csv",
                                              out_dir / "timeline.csv"};
  write_text_file(paths[0], tables.utilization);
  write_text_file(paths[1], tables.histogram);
  write_text_file(paths[2], tables.timeline);
  return paths;
}

std::filesystem::path export_plot_json(std::span<const CycleReport> reports,
                                       const std::filesystem::path& out_dir) {
  if (reports.empty()) throw EmptyCampaignError();
  json utilization = json::array();
  json timeline = json::array();
  for (const auto& r : reports) {
    utilization.push_back({{"cycle", r.cycle},
                           {"overall", r.overall_utilization},
                           {"actual_overall", r.actual_utilization},
                           {"per_agent", r.per_agent_utilization}});
    for (const auto& agent : r.timeline) {
      for (const auto& e : agent.entries) {
        timeline.push_back({{"cycle", r.cycle},
                            {"agent", agent.agent_id},
                            {"test", e.test_id},
                            {"start", e.start},
                            {"duration", e.planned_duration},
                            {"actual_duration", e.actual_duration},
                            {"outcome", e.failed ? "Fail" : "Pass"}});
      }
    }
  }
  auto summary = campaign_summary(reports);
  auto path = out_dir / "plot_data.json";
  write_json_file(path, json{{"format_version", kFormatVersion},
                             {"utilization", std::move(utilization)},
                             {"priority_histogram", summary.priority_histogram},
                             {"timeline", std::move(timeline)}});
  return path;
}

}  // namespace testsched
