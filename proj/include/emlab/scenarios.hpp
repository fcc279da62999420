// Scenario runners behind the command-line tool.
#pragma once

#include <filesystem>
#include <optional>

#include "emlab/config.hpp"
#include "emlab/makino.hpp"
#include "emlab/solver.hpp"

namespace emlab {

/// Exit codes of run_scenario and of the command-line tool.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// Generates the configured data family on `grid` and imposes the data
/// hypotheses (and the budget, when given).
PreparedData prepare_config_data(const ScenarioConfig& cfg, const GridSpec& grid, std::optional<double> budget);

FullState full_state_from(const RawData& d);
/// Perturbation fields from raw data; the free background fields start at zero.
PerturbationState perturbation_state_from(const RawData& d);

/// Runs the configured scenario, writing CSV files and summary.json into
/// `out`. Returns kExitPass when every in-scenario check passes and
/// kExitCheckFailed otherwise; errors throw.
int run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out);

}  // namespace emlab
