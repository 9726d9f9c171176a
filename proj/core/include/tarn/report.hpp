#pragma once

// Run report: a human summary, then a `[machine]` section of `key=value`
// lines (and `statistic,threshold,verdict` detection lines) that is a pure
// function of the scenario. Only the human part carries wall-clock time and
// file paths.

#include "tarn/adversary.hpp"
#include "tarn/session.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tarn {

struct RunReport {
    std::string config_path;
    std::string config_hash;
    SessionMetrics metrics;
    std::optional<DetectionReport> detection;
    std::int64_t wall_clock_ms = 0;
    std::string trace_path;
};

std::string format_report(const RunReport& report);

/// Everything after the `[machine]` marker line; empty if there is none.
std::string machine_section(std::string_view report_text);

/// `t,component,event,details` lines joined with trailing newlines.
std::string format_trace(const ScenarioResult& result);

} // namespace tarn
