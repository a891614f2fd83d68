#pragma once

/**
 * @file experiments.hpp
 * @brief Monte Carlo experiment runner behind the command-line tool.
 *
 * The pipeline named in a scenario's [experiment] section is executed for
 * every sweep value and trial. Trials draw from streams keyed by trial index
 * only, so each trial sees the same payload and noise realization at every
 * sweep point, and results land in index-keyed slots: output does not depend
 * on the worker count.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

struct RunOptions {
  std::optional<int> trials;              ///< overrides experiment.trials
  std::optional<std::uint64_t> seed;      ///< overrides experiment.seed
  int workers = 1;
  std::optional<std::filesystem::path> dump_rdmap;    ///< map of trial 0, first sweep value
  std::optional<std::filesystem::path> dump_pattern;  ///< beam cuts for every sweep value
};

struct SweepResult {
  std::string sweep_variable;  ///< column name including its unit
  std::vector<double> sweep_values;
  std::vector<std::string> metric_columns;      ///< names including units
  std::vector<std::vector<double>> metrics;     ///< one row per sweep value
  int trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  /// Index of a metric column; throws std::out_of_range if absent.
  std::size_t column(const std::string& name) const;
  double at(std::size_t row, const std::string& name) const { return metrics.at(row).at(column(name)); }
};

/// Wraps a module error with the trial that raised it.
class TrialError : public std::runtime_error {
 public:
  TrialError(int trial, const std::string& what);
  int trial() const { return trial_; }

 private:
  int trial_;
};

/// Applies the overrides in options and validates the result.
ScenarioConfig effective_config(ScenarioConfig config, const RunOptions& options);

/// Runs the configured pipeline over the configured sweep.
SweepResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Fused power gain versus sensing-unit side for perfect, least-squares and
/// conventional beams. Requires pipeline beam_registration and sweep side_m.
SweepResult exp_fig5(const ScenarioConfig& config, const RunOptions& options = {});

/// Range/velocity RMSE versus per-link SNR for one BS, data-level and
/// signal-level fusion. Requires pipeline cooperative_active and sweep snr_db.
SweepResult exp_fig7(const ScenarioConfig& config, const RunOptions& options = {});

/// Range NMSE versus passive-link SNR for active-only, passive-only and
/// cooperative sensing. Requires pipeline active_passive and sweep passive_snr_db.
SweepResult exp_fig6(const ScenarioConfig& config, const RunOptions& options = {});

}  // namespace isac
