#pragma once

#include <string>

#include "onionnet/metrics.hpp"

namespace onionnet::scenario {

// Milestone table for a finished run.
std::string render_report(const RunMetrics& metrics);

// Line charts of the per-tick series as standalone SVG files inside `dir`
// (created if missing). Returns the file names written.
std::vector<std::string> write_plots(const RunMetrics& metrics, const std::string& dir);

}  // namespace onionnet::scenario
