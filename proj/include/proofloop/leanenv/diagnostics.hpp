#pragma once

#include "proofloop/core/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace proofloop::leanenv {

// Parses compiler output. A line of the form
//   <path>:<line>:<col>: <severity>: <message>
// (or lake's `<severity>: <path>:<line>:<col>: <message>`) opens a diagnostic;
// following lines that are not headers or build-tool chatter extend its message.
// Headers with unknown severities are skipped along with their continuation.
std::vector<Diagnostic> parse_diagnostics(std::string_view raw_output);

// Inverse of parse_diagnostics on the Diagnostic model.
std::string format_diagnostics(const std::vector<Diagnostic>& diagnostics);

// True for the diagnostics Lean emits when a tactic block leaves goals open.
bool is_unsolved_goals(const Diagnostic& d);

inline constexpr std::string_view kNoGoalReported = "no goal reported";

// Index into `diagnostics` of the goal diagnostic paired with each site.
std::vector<std::optional<std::size_t>> match_goal_sites(const std::vector<Diagnostic>& diagnostics,
                                                         const std::vector<SourcePos>& sorry_sites,
                                                         std::string_view file = {});

// Pairs every sorry site with the nearest "unsolved goals" diagnostic at or
// after it and before the next site. Unmatched sites get kNoGoalReported.
// `file`, when non-empty, restricts matching to diagnostics of that file.
std::vector<GoalState> extract_goal_states(const std::vector<Diagnostic>& diagnostics,
                                           const std::vector<SourcePos>& sorry_sites,
                                           std::string_view file = {});

}  // namespace proofloop::leanenv
