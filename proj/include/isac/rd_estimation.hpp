#pragma once

/**
 * @file rd_estimation.hpp
 * @brief Single-link range-Doppler estimation on the channel quotient grid.
 */

#include <stdexcept>
#include <vector>

#include "isac/echo_channel.hpp"

namespace isac {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// rx ./ tx for one link.
struct ChannelMatrix {
  SymbolGrid values;
  LinkSpec link;
  Numerology numerology;
};

ChannelMatrix channel_quotient(const RxSymbolMatrix& rx, const TxFrame& tx);

/**
 * Magnitude of the zero-padded 2-D periodogram.
 *
 * Row l is delay l * delay_bin_s, column k is Doppler k * doppler_bin_hz.
 * Doppler bins at or above half the axis length wrap to negative values;
 * delay bins wrap only when signed_delay is set.
 */
struct RangeDopplerMap {
  Eigen::MatrixXd magnitudes;
  double delay_bin_s = 0.0;
  double doppler_bin_hz = 0.0;
  int zero_pad_range = 1;
  int zero_pad_doppler = 1;
  bool signed_delay = false;

  Eigen::Index delay_bins() const { return magnitudes.rows(); }
  Eigen::Index doppler_bins() const { return magnitudes.cols(); }
  double delay_of(double bin) const;
  double doppler_of(double bin) const;
};

/**
 * Inverse DFT over subcarriers, forward DFT over symbols, zero-padded by
 * (zr, zd). Unnormalized: a unit noise-free tone peaks at N*M.
 */
RangeDopplerMap range_doppler_map(const SymbolGrid& G, const Numerology& numerology, int zr, int zd,
                                  bool signed_delay = false);
inline RangeDopplerMap range_doppler_map(const ChannelMatrix& G, int zr, int zd) {
  return range_doppler_map(G.values, G.numerology, zr, zd);
}

struct Peak {
  double delay_bin = 0.0;    ///< fractional, after wrap
  double doppler_bin = 0.0;  ///< fractional, after wrap
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  double score = 0.0;        ///< magnitude at the integer peak bin
};

/**
 * Greedy extraction of the num_targets largest values, each excluding a
 * +-2 bin guard around earlier picks, refined by 3-point parabolic
 * interpolation per axis. Equal magnitudes resolve to the smaller delay bin,
 * then the smaller Doppler bin. Throws ShapeError if the map is smaller than
 * the 5 x 5 guard window.
 */
std::vector<Peak> peak_estimate(const RangeDopplerMap& map, int num_targets);

/// Median magnitude, the noise floor reference.
double map_median(const RangeDopplerMap& map);

/**
 * Strongest peak of the (zr, zd) map near fine bin (delay_bin, doppler_bin),
 * without materializing the map.
 *
 * The exact map is evaluated on a window of about +-(z/2 + 2) fine bins; if
 * its maximum lies on the window edge the window is re-centered there (up to
 * four times) before falling back to the full map.
 */
Peak zoom_peak(const SymbolGrid& G, const Numerology& numerology, int zr, int zd, long long delay_bin,
               long long doppler_bin, bool signed_delay = false);

struct SinglePeak {
  Peak peak;
  double coarse_median = 0.0;  ///< median of the coarse map; NaN unless requested
  double coarse_peak = 0.0;    ///< maximum of the coarse map
};

/**
 * Strongest peak of the (zr, zd) map: a coarse map padded only up to the next
 * 7-smooth size locates it, then zoom_peak refines it.
 */
SinglePeak find_single_peak(const SymbolGrid& G, const Numerology& numerology, int zr, int zd,
                            bool signed_delay = false, bool with_median = true);

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Estimate {
  double range_m = 0.0;
  double velocity_mps = 0.0;
  double score = 0.0;
  int tx_site_id = 0;
  int rx_site_id = 0;
  double snr_db = 0.0;
};

/**
 * Monostatic: range c*tau/2, velocity f*c/(2 fc). Bistatic: range is
 * (c*tau - baseline)/2, velocity f*c/(2 fc). Throws EstimationError for a
 * negative delay.
 */
Estimate to_range_velocity(double delay_s, double doppler_hz, const Vec3& tx_pos,
                           const Vec3& rx_pos, double carrier_freq_hz);

}  // namespace isac
