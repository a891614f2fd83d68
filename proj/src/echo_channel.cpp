#include "isac/echo_channel.hpp"

#include <cmath>

#include <fmt/format.h>

namespace isac {

double bistatic_delay(const Vec3& tx_pos, const Vec3& target_pos, const Vec3& rx_pos) {
  return ((target_pos - tx_pos).norm() + (rx_pos - target_pos).norm()) / kSpeedOfLight;
}

double bistatic_doppler(const Vec3& target_pos, const Vec3& target_vel, const Vec3& tx_pos,
                        const Vec3& rx_pos, double carrier_freq_hz) {
  const Vec3 to_tx = tx_pos - target_pos;
  const Vec3 to_rx = rx_pos - target_pos;
  const double dtx = to_tx.norm();
  const double drx = to_rx.norm();
  if (dtx == 0.0 || drx == 0.0) throw GeometryError("target coincides with a link site");
  return carrier_freq_hz / kSpeedOfLight * (target_vel.dot(to_tx) / dtx + target_vel.dot(to_rx) / drx);
}

double noise_variance_for(const LinkSpec& link, std::span<const Target> targets) {
  if (std::isinf(link.snr_db) && link.snr_db > 0) return 0.0;
  double power = 0.0;
  for (const auto& t : targets) power += std::norm(t.amplitude);
  if (targets.empty()) power = 1.0;
  return power / db_to_linear(link.snr_db);
}

namespace {

const BsSite& find_site(std::span<const BsSite> sites, int id) {
  for (const auto& s : sites)
    if (s.id == id) return s;
  throw GeometryError(fmt::format("site id {} does not exist", id));
}

}  // namespace

SymbolGrid link_response(const Numerology& nu, const LinkSpec& link, std::span<const BsSite> sites,
                         std::span<const Target> targets) {
  const BsSite& tx = find_site(sites, link.tx_site_id);
  const BsSite& rx = find_site(sites, link.rx_site_id);
  const int N = nu.num_subcarriers;
  const int M = nu.num_symbols;
  const double T = nu.symbol_duration_s();
  SymbolGrid H = SymbolGrid::Zero(N, M);
  Eigen::VectorXcd dcol(N);
  Eigen::RowVectorXcd drow(M);
  for (const auto& t : targets) {
    const double tau = bistatic_delay(tx.position_m, t.position_m, rx.position_m) +
                       link.sync_error.timing_offset_s;
    const double fd = bistatic_doppler(t.position_m, t.velocity_mps, tx.position_m, rx.position_m,
                                       nu.carrier_freq_hz) +
                      link.sync_error.cfo_hz;
    if (tau < 0.0 || tau >= nu.max_delay_s())
      throw AmbiguityError(fmt::format("delay {:.6g} s outside the unambiguous window [0, {:.6g}) s",
                                       tau, nu.max_delay_s()));
    if (std::abs(fd) >= nu.max_doppler_hz())
      throw AmbiguityError(fmt::format("Doppler {:.6g} Hz outside the unambiguous window +-{:.6g} Hz",
                                       fd, nu.max_doppler_hz()));
    // Phases reduced modulo one cycle before the trig call to keep them accurate at large n.
    for (int n = 0; n < N; ++n) {
      const double cyc = n * nu.subcarrier_spacing_hz * tau;
      dcol(n) = std::polar(1.0, -kTwoPi * (cyc - std::floor(cyc)));
    }
    for (int m = 0; m < M; ++m) {
      const double cyc = m * T * fd;
      drow(m) = std::polar(1.0, kTwoPi * (cyc - std::floor(cyc)));
    }
    H.noalias() += t.amplitude * (dcol * drow);
  }
  return H;
}

SymbolGrid unit_noise(int rows, int cols, RngStream& noise_stream) {
  SymbolGrid w(rows, cols);
  cplx* p = w.data();
  for (Eigen::Index i = 0; i < w.size(); ++i) p[i] = complex_normal(noise_stream, 1.0);
  return w;
}

RxSymbolMatrix compose_echo(const TxFrame& tx_frame, const SymbolGrid& response,
                            const SymbolGrid* unit_noise_grid, const LinkSpec& link,
                            double noise_variance) {
  RxSymbolMatrix out{tx_frame.symbols.cwiseProduct(response), link, noise_variance};
  if (noise_variance > 0.0 && unit_noise_grid) out.symbols += std::sqrt(noise_variance) * *unit_noise_grid;
  return out;
}

RxSymbolMatrix synthesize_echo(const TxFrame& tx_frame, const LinkSpec& link,
                               std::span<const BsSite> sites, std::span<const Target> targets,
                               RngStream& noise_stream) {
  const Numerology& nu = tx_frame.numerology;
  const SymbolGrid H = link_response(nu, link, sites, targets);
  const double var = noise_variance_for(link, targets);
  if (var == 0.0) return compose_echo(tx_frame, H, nullptr, link, 0.0);
  const SymbolGrid w = unit_noise(nu.num_subcarriers, nu.num_symbols, noise_stream);
  return compose_echo(tx_frame, H, &w, link, var);
}

LinkSpec realize_sync(const LinkSpec& link, RngStream& jitter_stream) {
  LinkSpec out = link;
  if (link.jitter.timing_std_s > 0.0)
    out.sync_error.timing_offset_s += link.jitter.timing_std_s * standard_normal(jitter_stream);
  if (link.jitter.cfo_std_hz > 0.0)
    out.sync_error.cfo_hz += link.jitter.cfo_std_hz * standard_normal(jitter_stream);
  return out;
}

}  // namespace isac
