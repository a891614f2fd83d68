#pragma once

/**
 * @file scenario.hpp
 * @brief Scenario description: waveform numerology, base-station sites,
 *        targets, sensing links and experiment settings.
 *
 * Units are SI throughout (Hz, s, m, m/s). Angles are radians inside the
 * library; only the command-line tool speaks degrees.
 */

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isac/common.hpp"

namespace isac {

/// Thrown for schema or invariant violations; the message names the key and bound.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Numerology {
  double carrier_freq_hz = 0.0;
  double subcarrier_spacing_hz = 0.0;
  int num_subcarriers = 0;
  int num_symbols = 0;
  double cp_fraction = 0.125;

  double bandwidth_hz() const { return num_subcarriers * subcarrier_spacing_hz; }
  double symbol_duration_s() const { return (1.0 + cp_fraction) / subcarrier_spacing_hz; }
  double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
  double range_resolution_m() const { return kSpeedOfLight / (2.0 * bandwidth_hz()); }
  double velocity_resolution_mps() const {
    return wavelength_m() / (2.0 * num_symbols * symbol_duration_s());
  }
  double max_delay_s() const { return 1.0 / subcarrier_spacing_hz; }
  double max_monostatic_range_m() const { return kSpeedOfLight / (2.0 * subcarrier_spacing_hz); }
  double max_doppler_hz() const { return 1.0 / (2.0 * symbol_duration_s()); }
};

enum class SiteRole { tx_rx, tx_only, rx_only };

std::string_view to_string(SiteRole role);

struct BsSite {
  int id = 0;
  Vec3 position_m = Vec3::Zero();
  int array_rows = 1;
  int array_cols = 1;
  double element_spacing_wavelengths = 0.5;
  SiteRole role = SiteRole::tx_rx;

  bool can_transmit() const { return role != SiteRole::rx_only; }
  bool can_receive() const { return role != SiteRole::tx_only; }
};

struct Target {
  Vec3 position_m = Vec3::Zero();
  Vec3 velocity_mps = Vec3::Zero();
  cplx amplitude{1.0, 0.0};

  /// Unit direction of travel; +x for a static target.
  Vec3 heading() const;
  double speed_mps() const { return velocity_mps.norm(); }
};

/// Timing and carrier offsets between a separated transmitter and receiver.
struct SyncError {
  double timing_offset_s = 0.0;
  double cfo_hz = 0.0;

  bool is_zero() const { return timing_offset_s == 0.0 && cfo_hz == 0.0; }
};

/// Standard deviations of the per-frame residual around a link's SyncError.
struct SyncJitter {
  double timing_std_s = 0.0;
  double cfo_std_hz = 0.0;

  bool is_zero() const { return timing_std_s == 0.0 && cfo_std_hz == 0.0; }
};

struct LinkSpec {
  int tx_site_id = 0;
  int rx_site_id = 0;
  SyncError sync_error;
  SyncJitter jitter;
  /// Per-element SNR before processing gain; +inf selects the noise-free mode.
  double snr_db = 0.0;

  bool monostatic() const { return tx_site_id == rx_site_id; }
};

enum class Pipeline { cooperative_active, active_passive, beam_registration };

std::string_view to_string(Pipeline pipeline);

struct SweepSpec {
  std::string variable = "none";
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  /// Inclusive grid start, start+step, ... up to stop (within step/1e6).
  std::vector<double> values() const;
};

/// Experiment-level settings read from the [experiment] section.
struct ExperimentSpec {
  Pipeline pipeline = Pipeline::cooperative_active;
  SweepSpec sweep;
  int zero_pad_range = 4;
  int zero_pad_doppler = 4;
  double kappa = 2.0;
  int refine_grid = 8;
  double refine_shrink_cells = 1.5;
  int refine_max_iterations = 6;
  double refine_position_tol_m = 0.05;
  double refine_velocity_tol_mps = 0.05;
  int fusion_site_id = 0;
  Vec3 area_center_m = Vec3::Zero();
  double synthesis_grid_fraction = 0.125;
};

struct ScenarioConfig {
  Numerology numerology;
  std::vector<BsSite> sites;
  std::vector<Target> targets;
  std::vector<LinkSpec> links;
  ExperimentSpec experiment;
  std::uint64_t master_seed = 1;
  int trials = 1;

  const BsSite& site(int id) const;
};

/// Checks every invariant; throws ScenarioError naming the offending key.
void validate_scenario(const ScenarioConfig& config);

/// Parses a configuration document, fills defaults and validates it.
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

/// Canonical text form; load_scenario(serialize_scenario(c)) reproduces c.
std::string serialize_scenario(const ScenarioConfig& config);

/// FNV-1a hash of the canonical text form, used to tag output rows.
std::uint64_t scenario_hash(const ScenarioConfig& config);

}  // namespace isac
