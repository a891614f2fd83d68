#pragma once

// Independent oracles and scene builders shared by the unit and acceptance tests.
// Everything here is written from the closed-form signal model, not from library internals.

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "isac/common.hpp"
#include "isac/data_fusion.hpp"
#include "isac/echo_channel.hpp"
#include "isac/rd_estimation.hpp"
#include "isac/scenario.hpp"
#include "isac/signal_fusion.hpp"

namespace testing_support {

using isac::cplx;
using isac::kPi;
using isac::kSpeedOfLight;
using isac::kTwoPi;

inline std::filesystem::path preset(const std::string& name) {
  return std::filesystem::path(ISAC_PRESET_DIR) / name;
}

inline isac::Numerology numerology(double fc, double df, int n, int m) {
  isac::Numerology nu;
  nu.carrier_freq_hz = fc;
  nu.subcarrier_spacing_hz = df;
  nu.num_subcarriers = n;
  nu.num_symbols = m;
  return nu;
}

/// a * exp(-j2pi n df tau) * exp(+j2pi m T f), each entry from its own std::polar.
inline isac::SymbolGrid tone(const isac::Numerology& nu, double tau, double f, cplx a = {1.0, 0.0}) {
  const double T = nu.symbol_duration_s();
  isac::SymbolGrid g(nu.num_subcarriers, nu.num_symbols);
  for (int n = 0; n < nu.num_subcarriers; ++n)
    for (int m = 0; m < nu.num_symbols; ++m)
      g(n, m) = a * std::polar(1.0, -kTwoPi * n * nu.subcarrier_spacing_hz * tau + kTwoPi * m * T * f);
  return g;
}

/// Tone placed on fractional fine bins of the (zr, zd) map.
inline isac::SymbolGrid tone_at_bins(const isac::Numerology& nu, double delay_bin, double doppler_bin, int zr,
                                     int zd, cplx a = {1.0, 0.0}) {
  const double tau = delay_bin / (zr * nu.num_subcarriers * nu.subcarrier_spacing_hz);
  const double f = doppler_bin / (zd * nu.num_symbols * nu.symbol_duration_s());
  return tone(nu, tau, f, a);
}

/// |X(l, k)| by the defining double sum: inverse DFT over n, forward DFT over m.
inline double dft_magnitude(const isac::SymbolGrid& G, int zr, int zd, long long l, long long k) {
  const long long L = static_cast<long long>(G.rows()) * zr;
  const long long K = static_cast<long long>(G.cols()) * zd;
  cplx sum{0.0, 0.0};
  for (Eigen::Index n = 0; n < G.rows(); ++n)
    for (Eigen::Index m = 0; m < G.cols(); ++m) {
      const double phase = kTwoPi * (static_cast<double>((n * l) % L) / static_cast<double>(L) -
                                     static_cast<double>((m * k) % K) / static_cast<double>(K));
      sum += G(n, m) * std::polar(1.0, phase);
    }
  return std::abs(sum);
}

inline long long wrap_bin(long long b, long long n) { return ((b % n) + n) % n; }

/// Direct matched-filter score of one link: |sum G(n,m) conj(s(n,m))| for (tau, f).
inline double direct_link_score(const isac::SymbolGrid& G, const isac::Numerology& nu, double tau, double f) {
  const double T = nu.symbol_duration_s();
  cplx sum{0.0, 0.0};
  for (Eigen::Index n = 0; n < G.rows(); ++n) {
    cplx row{0.0, 0.0};
    for (Eigen::Index m = 0; m < G.cols(); ++m) row += G(n, m) * std::polar(1.0, -kTwoPi * m * T * f);
    sum += row * std::polar(1.0, kTwoPi * n * nu.subcarrier_spacing_hz * tau);
  }
  return std::abs(sum);
}

/// Monostatic site list with every site at the same range from the origin.
inline isac::ScenarioConfig ring_scene(const isac::Numerology& nu, const std::vector<double>& bearings_deg,
                                       double distance_m, const isac::Vec3& target_position,
                                       const isac::Vec3& target_velocity, double snr_db) {
  isac::ScenarioConfig c;
  c.numerology = nu;
  for (std::size_t i = 0; i < bearings_deg.size(); ++i) {
    isac::BsSite s;
    s.id = static_cast<int>(i);
    const double b = bearings_deg[i] * kPi / 180.0;
    s.position_m = {distance_m * std::cos(b), distance_m * std::sin(b), 0.0};
    c.sites.push_back(s);
    isac::LinkSpec l;
    l.tx_site_id = l.rx_site_id = s.id;
    l.snr_db = snr_db;
    c.links.push_back(l);
  }
  isac::Target t;
  t.position_m = target_position;
  t.velocity_mps = target_velocity;
  c.targets.push_back(t);
  return c;
}

/// Noise-free monostatic links around one moving target, ready for signal-level fusion.
struct FusionScene {
  isac::Numerology nu;
  std::vector<isac::BsSite> sites;
  isac::Target target;
  isac::Vec3 heading = isac::Vec3::UnitX();
  double speed_mps = 0.0;
  std::vector<isac::ChannelMatrix> channels;

  std::vector<isac::FusionLink> links() const {
    std::vector<isac::FusionLink> out;
    for (std::size_t i = 0; i < channels.size(); ++i)
      out.push_back({&channels[i], sites[i].position_m, sites[i].position_m});
    return out;
  }
  isac::Vec2 truth() const { return target.position_m.head<2>(); }
};

/// Sites at random bearings and ranges in [rmin, rmax] from a target near the origin.
inline FusionScene random_fusion_scene(const isac::Numerology& nu, int num_sites, double rmin, double rmax,
                                       std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  FusionScene s;
  s.nu = nu;
  s.target.position_m = {20.0 * (u01(gen) - 0.5), 20.0 * (u01(gen) - 0.5), 0.0};
  const double heading_angle = kTwoPi * u01(gen);
  s.heading = {std::cos(heading_angle), std::sin(heading_angle), 0.0};
  s.speed_mps = 5.0 + 25.0 * u01(gen);
  s.target.velocity_mps = s.speed_mps * s.heading;
  s.target.amplitude = std::polar(1.0, kTwoPi * u01(gen));
  const double base = kTwoPi * u01(gen);
  for (int i = 0; i < num_sites; ++i) {
    isac::BsSite b;
    b.id = i;
    const double bearing = base + kTwoPi * (i + 0.3 * (u01(gen) - 0.5)) / num_sites;
    const double r = rmin + (rmax - rmin) * u01(gen);
    b.position_m = s.target.position_m + isac::Vec3{r * std::cos(bearing), r * std::sin(bearing), 0.0};
    s.sites.push_back(b);
  }
  const std::vector<isac::Target> tg{s.target};
  for (const auto& b : s.sites) {
    isac::LinkSpec l;
    l.tx_site_id = l.rx_site_id = b.id;
    l.snr_db = std::numeric_limits<double>::infinity();
    s.channels.push_back({isac::link_response(nu, l, s.sites, tg), l, nu});
  }
  return s;
}

struct DenseOptimum {
  isac::Vec2 position_m = isac::Vec2::Zero();
  double velocity_mps = 0.0;
  double score = -1.0;
};

/// Exhaustive search of sum_links |sum G conj(s)| over every grid node of the region x interval.
///
/// Each link is evaluated from the defining sum, factored as sum_m (sum_n G e^{+j2pi n df tau}) e^{-j2pi m T f}
/// so the subcarrier sum is shared by all velocities at one position.
inline DenseOptimum dense_grid_search(const FusionScene& s, const isac::ConfidenceRegion& region,
                                      const isac::ConfidenceInterval& interval, double pitch_m, double pitch_mps) {
  const isac::Numerology& nu = s.nu;
  const double T = nu.symbol_duration_s();
  const int nx = static_cast<int>(std::floor(2.0 * region.half_widths_m.x() / pitch_m + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(2.0 * region.half_widths_m.y() / pitch_m + 1e-9)) + 1;
  const int nv = static_cast<int>(std::floor(2.0 * interval.half_width_mps / pitch_mps + 1e-9)) + 1;
  const isac::Vec2 lo = region.center_m - region.half_widths_m;
  const double vlo = interval.center_mps - interval.half_width_mps;
  const int N = nu.num_subcarriers;
  const int M = nu.num_symbols;

  DenseOptimum best;
  std::vector<double> scores(static_cast<std::size_t>(nv));
  Eigen::VectorXcd u(M);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      const isac::Vec2 p = lo + isac::Vec2{ix * pitch_m, iy * pitch_m};
      const isac::Vec3 pos = isac::horizontal(p);
      std::fill(scores.begin(), scores.end(), 0.0);
      for (std::size_t li = 0; li < s.channels.size(); ++li) {
        const isac::SymbolGrid& G = s.channels[li].values;
        const isac::Vec3& site = s.sites[li].position_m;
        const double tau = isac::bistatic_delay(site, pos, site);
        // Doppler is linear in the speed along the heading.
        const double f_per_mps = isac::bistatic_doppler(pos, s.heading, site, site, nu.carrier_freq_hz);
        u.setZero();
        for (int n = 0; n < N; ++n) {
          const cplx a = std::polar(1.0, kTwoPi * n * nu.subcarrier_spacing_hz * tau);
          for (int m = 0; m < M; ++m) u(m) += G(n, m) * a;
        }
        for (int iv = 0; iv < nv; ++iv) {
          const double f = (vlo + iv * pitch_mps) * f_per_mps;
          cplx acc{0.0, 0.0};
          for (int m = 0; m < M; ++m) acc += u(m) * std::polar(1.0, -kTwoPi * m * T * f);
          scores[static_cast<std::size_t>(iv)] += std::abs(acc);
        }
      }
      for (int iv = 0; iv < nv; ++iv)
        if (scores[static_cast<std::size_t>(iv)] > best.score) {
          best.score = scores[static_cast<std::size_t>(iv)];
          best.position_m = p;
          best.velocity_mps = vlo + iv * pitch_mps;
        }
    }
  return best;
}

}  // namespace testing_support
