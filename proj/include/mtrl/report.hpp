#pragma once

// Report files for one run or sweep: regret.csv, summary.json, regret.svg,
// timing.json, plus diagnostics.csv and spectral dumps when requested.

#include <filesystem>
#include <string>
#include <vector>

#include "mtrl/harness.hpp"

namespace mtrl {

// One row per (arm, round). Deterministic.
std::string regret_csv(const std::vector<RegretLog>& arms);

// Final regret, per-trial SD and instance stats, config echo. Deterministic;
// wall time lives in timing_json.
std::string summary_json(const std::vector<RegretLog>& arms, const ExperimentConfig& base);

std::string timing_json(const std::vector<RegretLog>& arms);

// Per-round diagnostic rows of every arm.
std::string diagnostics_csv(const std::vector<RegretLog>& arms);

// One polyline per arm. `stamp` goes into a comment and is the only part
// that may differ between renders of the same arms.
std::string regret_svg(const std::vector<RegretLog>& arms, const ExperimentConfig& base,
                       const std::string& stamp);

// Writes every report into base.output_dir (created if missing). Throws
// IoError when the directory or a file cannot be written.
std::vector<std::filesystem::path> emit_reports(const std::vector<RegretLog>& arms,
                                                const ExperimentConfig& base);

}  // namespace mtrl
