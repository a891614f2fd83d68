#include "isac/cscc_fusion.hpp"

#include <cmath>

#include <fmt/format.h>

#include "phasor.hpp"

namespace isac {

using detail::phasor_ramp;

double PassiveGeometry::active_delay(double r) const { return 2.0 * r / kSpeedOfLight; }

double PassiveGeometry::passive_delay(double r) const {
  return bistatic_delay(passive_tx_m, position_at(r), active_site_m);
}

double PassiveGeometry::active_doppler(double r, double speed) const {
  return bistatic_doppler(position_at(r), speed * heading, active_site_m, active_site_m,
                          carrier_freq_hz);
}

double PassiveGeometry::passive_doppler(double r, double speed) const {
  return bistatic_doppler(position_at(r), speed * heading, passive_tx_m, active_site_m,
                          carrier_freq_hz);
}

double PassiveGeometry::range_from_passive_delay(double delay_s) const {
  // |d - r u| + r = D  =>  r = (D^2 - |d|^2) / (2 (D - u.d))
  const Vec3 d = passive_tx_m - active_site_m;
  const double D = kSpeedOfLight * delay_s;
  const double denom = 2.0 * (D - bearing.dot(d));
  if (!(D >= d.norm()) || !(denom > 0.0))
    throw CsccError(fmt::format("passive delay {:.6g} s is shorter than the baseline", delay_s));
  const double r = (D * D - d.squaredNorm()) / denom;
  if (r < 0.0 || r > D) throw CsccError("passive delay maps to no range on the bearing");
  return r;
}

double PassiveGeometry::speed_from_active_doppler(double r, double doppler_hz) const {
  const double per_mps = active_doppler(r, 1.0);
  if (std::abs(per_mps) < 1e-12)
    throw CsccError("heading is perpendicular to the active line of sight");
  return doppler_hz / per_mps;
}

LinkDifference predicted_difference(const PassiveGeometry& g, double r, double speed) {
  return {g.passive_delay(r) - g.active_delay(r),
          g.passive_doppler(r, speed) - g.active_doppler(r, speed)};
}

OffsetEstimate cross_correlate(const ChannelMatrix& active, const ChannelMatrix& passive,
                               const LinkDifference& predicted, int zr, int zd) {
  if (active.values.rows() != passive.values.rows() || active.values.cols() != passive.values.cols())
    throw ShapeError("cross_correlate: active and passive grids differ in shape");
  const SymbolGrid C = passive.values.cwiseProduct(active.values.conjugate());
  const SinglePeak sp = find_single_peak(C, active.numerology, zr, zd, true);
  OffsetEstimate out;
  out.correlation_score = sp.peak.score;
  out.peak_to_median_db = sp.coarse_median > 0.0 ? 20.0 * std::log10(sp.coarse_peak / sp.coarse_median)
                                                 : std::numeric_limits<double>::infinity();
  if (!(out.peak_to_median_db >= 6.0))
    throw CsccError(fmt::format("correlation peak only {:.2f} dB above the map median (need 6 dB)",
                                out.peak_to_median_db));
  out.timing_offset_s = sp.peak.delay_s - predicted.delay_s;
  out.cfo_hz = sp.peak.doppler_hz - predicted.doppler_hz;
  return out;
}

ChannelMatrix compensate(const ChannelMatrix& passive, const OffsetEstimate& offsets) {
  const Numerology& nu = passive.numerology;
  const Eigen::VectorXcd a =
      phasor_ramp(passive.values.rows(), nu.subcarrier_spacing_hz * offsets.timing_offset_s, +1.0);
  const Eigen::VectorXcd b =
      phasor_ramp(passive.values.cols(), nu.symbol_duration_s() * offsets.cfo_hz, -1.0);
  ChannelMatrix out = passive;
  out.values = passive.values.cwiseProduct(a * b.transpose());
  out.link.sync_error.timing_offset_s -= offsets.timing_offset_s;
  out.link.sync_error.cfo_hz -= offsets.cfo_hz;
  return out;
}

LinkPeak measure_link(const ChannelMatrix& G, int zr, int zd) {
  const SinglePeak sp = find_single_peak(G.values, G.numerology, zr, zd);
  LinkPeak out;
  out.peak = sp.peak;
  const double ratio = sp.coarse_median > 0.0 ? sp.coarse_peak / sp.coarse_median : 1e12;
  out.snr_linear = ratio * ratio;
  return out;
}

FusedRange fuse_active_passive(const ChannelMatrix& active, const LinkPeak& ap,
                               const ChannelMatrix& passive, const LinkPeak& pp,
                               const PassiveGeometry& g, int zr) {
  const Numerology& nu = active.numerology;
  const double r_a = 0.5 * kSpeedOfLight * ap.peak.delay_s;
  const double r_p = g.range_from_passive_delay(pp.peak.delay_s);
  const double bin = nu.range_resolution_m();
  const double pitch = bin / zr;
  const double lo = std::max(0.0, std::min(r_a, r_p) - 3.0 * bin);
  const double hi = std::max(r_a, r_p) + 3.0 * bin;
  const auto count = static_cast<Eigen::Index>(std::ceil((hi - lo) / pitch)) + 1;
  if (count < 3) throw CsccError("fused range axis is empty");

  const double T = nu.symbol_duration_s();
  const Eigen::Index N = active.values.rows();
  const Eigen::VectorXcd ya =
      active.values * phasor_ramp(active.values.cols(), T * ap.peak.doppler_hz, -1.0);
  const Eigen::VectorXcd yp =
      passive.values * phasor_ramp(passive.values.cols(), T * pp.peak.doppler_hz, -1.0);

  const double wsum = ap.snr_linear + pp.snr_linear;
  FusedRange out;
  out.active_weight = ap.snr_linear / wsum;
  out.passive_weight = pp.snr_linear / wsum;

  Eigen::VectorXd fused(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double r = lo + static_cast<double>(i) * pitch;
    const Eigen::VectorXcd qa = phasor_ramp(N, nu.subcarrier_spacing_hz * g.active_delay(r), +1.0);
    const Eigen::VectorXcd qp = phasor_ramp(N, nu.subcarrier_spacing_hz * g.passive_delay(r), +1.0);
    fused(i) = out.active_weight * std::abs((qa.array() * ya.array()).sum()) +
               out.passive_weight * std::abs((qp.array() * yp.array()).sum());
  }
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < count; ++i)
    if (fused(i) > fused(best)) best = i;
  double offset = 0.0;
  if (best > 0 && best < count - 1) {
    const double denom = fused(best - 1) - 2.0 * fused(best) + fused(best + 1);
    if (denom < 0.0) offset = std::clamp(0.5 * (fused(best - 1) - fused(best + 1)) / denom, -0.5, 0.5);
  }
  const double r = lo + (static_cast<double>(best) + offset) * pitch;
  out.estimate.range_m = r;
  out.estimate.velocity_mps = g.speed_from_active_doppler(r, ap.peak.doppler_hz);
  out.estimate.score = fused(best);
  out.estimate.tx_site_id = active.link.tx_site_id;
  out.estimate.rx_site_id = active.link.rx_site_id;
  out.estimate.snr_db = linear_to_db(ap.snr_linear + pp.snr_linear);
  return out;
}

FusedRange fuse_active_passive(const ChannelMatrix& active, const ChannelMatrix& passive,
                               const PassiveGeometry& g, int zr, int zd) {
  return fuse_active_passive(active, measure_link(active, zr, zd), passive,
                             measure_link(passive, zr, zd), g, zr);
}

}  // namespace isac
