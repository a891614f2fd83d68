#pragma once

/**
 * @file cscc_fusion.hpp
 * @brief Cooperative active and passive sensing: timing/frequency offset
 *        estimation by cross-correlating a passive link with the co-located
 *        active link, compensation, and fusion of the two links.
 */

#include <stdexcept>

#include "isac/rd_estimation.hpp"

namespace isac {

class CsccError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OffsetEstimate {
  double timing_offset_s = 0.0;
  double cfo_hz = 0.0;
  double correlation_score = 0.0;  ///< peak magnitude of the correlation map
  double peak_to_median_db = 0.0;
};

/**
 * Geometry of one active site A and one passive transmitter B. A target is
 * parameterized by its range r from A along a known bearing and its speed
 * along a known heading.
 */
struct PassiveGeometry {
  Vec3 active_site_m = Vec3::Zero();
  Vec3 passive_tx_m = Vec3::Zero();
  Vec3 bearing = Vec3::UnitX();  ///< unit vector from A toward the target
  Vec3 heading = Vec3::UnitX();  ///< unit direction of travel
  double carrier_freq_hz = 0.0;

  Vec3 position_at(double range_m) const { return active_site_m + range_m * bearing; }
  double active_delay(double range_m) const;
  double passive_delay(double range_m) const;
  double active_doppler(double range_m, double speed_mps) const;
  double passive_doppler(double range_m, double speed_mps) const;
  /// Range whose passive delay equals delay_s; throws CsccError if none is >= 0.
  double range_from_passive_delay(double delay_s) const;
  /// Speed whose active Doppler at range_m equals doppler_hz.
  double speed_from_active_doppler(double range_m, double doppler_hz) const;
};

/// Predicted (passive - active) delay and Doppler of a target.
struct LinkDifference {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
};

LinkDifference predicted_difference(const PassiveGeometry& geometry, double range_m, double speed_mps);

/**
 * Offsets of the passive link from C = passive .* conj(active).
 *
 * The peak of C's map sits at the true (passive - active) difference plus the
 * offsets; subtracting the predicted difference leaves the offsets. Throws
 * CsccError when the peak is less than 6 dB above the map median.
 */
OffsetEstimate cross_correlate(const ChannelMatrix& active, const ChannelMatrix& passive,
                               const LinkDifference& predicted, int zr, int zd);

/// G(n, m) exp(+j2pi n df to) exp(-j2pi m T cfo).
ChannelMatrix compensate(const ChannelMatrix& passive, const OffsetEstimate& offsets);

struct LinkPeak {
  Peak peak;
  double snr_linear = 0.0;  ///< (coarse peak / coarse median)^2
};

/// Strongest peak of one link plus its SNR estimate.
LinkPeak measure_link(const ChannelMatrix& G, int zr, int zd);

struct FusedRange {
  Estimate estimate;        ///< range from the active site, speed along the heading
  double active_weight = 0.0;
  double passive_weight = 0.0;
};

/**
 * Fuses an active link and a compensated passive link on a common range axis.
 *
 * Each link's delay profile is evaluated exactly along its own Doppler ridge
 * at ranges r from the active site (delay 2r/c on the active link,
 * passive_delay(r) on the passive one). The profiles are summed with weights
 * equal to each link's SNR estimate and the fused peak is refined
 * parabolically. The axis spans both single-link estimates with a margin of
 * 3 range bins at a pitch of one bin / zr. Throws CsccError if the passive
 * peak maps to no valid range.
 */
FusedRange fuse_active_passive(const ChannelMatrix& active, const ChannelMatrix& passive,
                               const PassiveGeometry& geometry, int zr, int zd);

/// Same, with the per-link peaks already measured.
FusedRange fuse_active_passive(const ChannelMatrix& active, const LinkPeak& active_peak,
                               const ChannelMatrix& passive, const LinkPeak& passive_peak,
                               const PassiveGeometry& geometry, int zr);

}  // namespace isac
