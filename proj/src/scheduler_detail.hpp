#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "testsched/scheduler.hpp"

namespace testsched::detail {

/// Capped number of cycles since the pair last ran; `cap` if it never ran.
int pair_gap(const std::string& test_id, const std::string& agent_id,
             const PairHistory& pair_last_cycle, int current_cycle, int cap);

/// Indices into instance.prioritized by descending packed priority, then id.
std::vector<std::size_t> priority_order(const SchedulingInstance& instance);

}  // namespace testsched::detail
