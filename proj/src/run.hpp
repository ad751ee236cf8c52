#pragma once

#include "config.hpp"

#include <string>

namespace cfpgd::app {

/// Runs the greedy solver for the configuration and writes the CSV report,
/// JSON summary and modes file. Returns the process exit code:
/// 0 converged, 2 stagnated, 3 max_modes.
int run_solve(const RunConfig& config);

/// Writes the assembled operator matrices in MatrixMarket format to
/// `out_dir/A_<label>.mtx` and `out_dir/M_<label>.mtx`.
void export_matrices(const RunConfig& config, const std::string& out_dir);

/// 17-significant-digit decimal text (round-trips doubles exactly).
std::string format_real(double value);

}  // namespace cfpgd::app
