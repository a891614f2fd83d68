#include "isac/rd_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fft.hpp"
#include "phasor.hpp"

namespace isac {

ChannelMatrix channel_quotient(const RxSymbolMatrix& rx, const TxFrame& tx) {
  if (rx.symbols.rows() != tx.symbols.rows() || rx.symbols.cols() != tx.symbols.cols())
    throw ShapeError(fmt::format("channel_quotient: rx is {}x{} but tx is {}x{}", rx.symbols.rows(),
                                 rx.symbols.cols(), tx.symbols.rows(), tx.symbols.cols()));
  return {rx.symbols.cwiseQuotient(tx.symbols), rx.link, tx.numerology};
}

namespace {

double wrap_bin(Eigen::Index bin, Eigen::Index size, bool wrap) {
  if (wrap && 2 * bin >= size) return static_cast<double>(bin - size);
  return static_cast<double>(bin);
}

double parabolic_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

Eigen::Index cyc(Eigen::Index i, Eigen::Index n) { return ((i % n) + n) % n; }

Peak make_peak(const RangeDopplerMap& map, Eigen::Index l, Eigen::Index k, double dl, double dk,
               double score) {
  Peak p;
  p.delay_bin = wrap_bin(l, map.delay_bins(), map.signed_delay) + dl;
  p.doppler_bin = wrap_bin(k, map.doppler_bins(), true) + dk;
  p.delay_s = p.delay_bin * map.delay_bin_s;
  p.doppler_hz = p.doppler_bin * map.doppler_bin_hz;
  p.score = score;
  return p;
}

RangeDopplerMap empty_map(const Numerology& nu, int zr, int zd, bool signed_delay) {
  RangeDopplerMap map;
  map.delay_bin_s = 1.0 / (static_cast<double>(zr) * nu.num_subcarriers * nu.subcarrier_spacing_hz);
  map.doppler_bin_hz = 1.0 / (static_cast<double>(zd) * nu.num_symbols * nu.symbol_duration_s());
  map.zero_pad_range = zr;
  map.zero_pad_doppler = zd;
  map.signed_delay = signed_delay;
  return map;
}

}  // namespace

double RangeDopplerMap::delay_of(double bin) const { return bin * delay_bin_s; }
double RangeDopplerMap::doppler_of(double bin) const { return bin * doppler_bin_hz; }

namespace {

Eigen::MatrixXd padded_magnitudes(const SymbolGrid& G, Eigen::Index L, Eigen::Index K) {
  return detail::padded_dft_magnitudes(G, static_cast<int>(L), static_cast<int>(K));
}

double median_of(const Eigen::MatrixXd& a) {
  std::vector<double> v(a.data(), a.data() + a.size());
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

RangeDopplerMap range_doppler_map(const SymbolGrid& G, const Numerology& nu, int zr, int zd,
                                  bool signed_delay) {
  if (zr < 1 || zd < 1) throw std::invalid_argument("range_doppler_map: zero-pad factors must be >= 1");
  RangeDopplerMap map = empty_map(nu, zr, zd, signed_delay);
  map.magnitudes = padded_magnitudes(G, zr * G.rows(), zd * G.cols());
  return map;
}

std::vector<Peak> peak_estimate(const RangeDopplerMap& map, int num_targets) {
  if (num_targets < 1) throw std::invalid_argument("peak_estimate: num_targets must be >= 1");
  const Eigen::Index L = map.delay_bins();
  const Eigen::Index K = map.doppler_bins();
  if (L < 5 || K < 5)
    throw ShapeError(fmt::format("peak_estimate: map {}x{} is smaller than the 5x5 guard window", L, K));
  const Eigen::MatrixXd& a = map.magnitudes;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> excluded =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(L, K, false);

  std::vector<Peak> peaks;
  for (int t = 0; t < num_targets; ++t) {
    Eigen::Index bl = -1;
    Eigen::Index bk = -1;
    double best = -1.0;
    for (Eigen::Index l = 0; l < L; ++l)
      for (Eigen::Index k = 0; k < K; ++k)
        if (!excluded(l, k) && a(l, k) > best) {
          best = a(l, k);
          bl = l;
          bk = k;
        }
    if (bl < 0) break;
    const double dl = parabolic_offset(a(cyc(bl - 1, L), bk), best, a(cyc(bl + 1, L), bk));
    const double dk = parabolic_offset(a(bl, cyc(bk - 1, K)), best, a(bl, cyc(bk + 1, K)));
    peaks.push_back(make_peak(map, bl, bk, dl, dk, best));
    for (Eigen::Index i = -2; i <= 2; ++i)
      for (Eigen::Index j = -2; j <= 2; ++j) excluded(cyc(bl + i, L), cyc(bk + j, K)) = true;
  }
  return peaks;
}

double map_median(const RangeDopplerMap& map) { return median_of(map.magnitudes); }

namespace {

struct Window {
  Eigen::MatrixXd values;
  std::vector<long long> lbins;
  std::vector<long long> kbins;
};

/// Exact zero-padded map on the fine bins (l0 +- hl) x (k0 +- hk), cyclic.
Window exact_window(const SymbolGrid& G, long long L, long long K, long long l0, long long k0,
                    long long hl, long long hk) {
  const long long N = G.rows();
  const long long M = G.cols();
  Window w;
  w.lbins.resize(2 * hl + 1);
  w.kbins.resize(2 * hk + 1);
  for (long long i = 0; i <= 2 * hl; ++i) w.lbins[i] = cyc(l0 - hl + i, L);
  for (long long j = 0; j <= 2 * hk; ++j) w.kbins[j] = cyc(k0 - hk + j, K);
  Eigen::MatrixXcd E(M, 2 * hk + 1);
  for (long long j = 0; j <= 2 * hk; ++j)
    E.col(j) = detail::phasor_ramp(M, static_cast<double>(w.kbins[j]) / static_cast<double>(K), -1.0);
  Eigen::MatrixXcd P(2 * hl + 1, N);
  for (long long i = 0; i <= 2 * hl; ++i)
    P.row(i) = detail::phasor_ramp(N, static_cast<double>(w.lbins[i]) / static_cast<double>(L), +1.0).transpose();
  const Eigen::MatrixXcd A = G * E;
  w.values = (P * A).cwiseAbs();
  return w;
}

}  // namespace

Peak zoom_peak(const SymbolGrid& G, const Numerology& nu, int zr, int zd, long long delay_bin,
               long long doppler_bin, bool signed_delay) {
  const long long L = zr * G.rows();
  const long long K = zd * G.cols();
  const long long hl = (zr + 1) / 2 + 2;
  const long long hk = (zd + 1) / 2 + 2;
  if (2 * hl + 3 > L || 2 * hk + 3 > K)
    return peak_estimate(range_doppler_map(G, nu, zr, zd, signed_delay), 1).front();

  long long l0 = cyc(delay_bin, L);
  long long k0 = cyc(doppler_bin, K);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const Window w = exact_window(G, L, K, l0, k0, hl, hk);
    const Eigen::MatrixXd& W = w.values;
    Eigen::Index bi = 0;
    Eigen::Index bj = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        const double v = W(i, j);
        const bool tie_wins =
            v == best && (w.lbins[i] < w.lbins[bi] || (w.lbins[i] == w.lbins[bi] && w.kbins[j] < w.kbins[bj]));
        if (v > best || tie_wins) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (bi == 0 || bj == 0 || bi == W.rows() - 1 || bj == W.cols() - 1) {
      l0 = w.lbins[bi];
      k0 = w.kbins[bj];
      continue;
    }
    const double dl = parabolic_offset(W(bi - 1, bj), best, W(bi + 1, bj));
    const double dk = parabolic_offset(W(bi, bj - 1), best, W(bi, bj + 1));
    const RangeDopplerMap axes = empty_map(nu, zr, zd, signed_delay);
    Peak p;
    p.delay_bin = wrap_bin(w.lbins[bi], L, signed_delay) + dl;
    p.doppler_bin = wrap_bin(w.kbins[bj], K, true) + dk;
    p.delay_s = p.delay_bin * axes.delay_bin_s;
    p.doppler_hz = p.doppler_bin * axes.doppler_bin_hz;
    p.score = best;
    return p;
  }
  return peak_estimate(range_doppler_map(G, nu, zr, zd, signed_delay), 1).front();
}

SinglePeak find_single_peak(const SymbolGrid& G, const Numerology& nu, int zr, int zd,
                            bool signed_delay, bool with_median) {
  const long long N = G.rows();
  const long long M = G.cols();
  const long long Lc = detail::next_fast_size(static_cast<int>(N));
  const long long Kc = detail::next_fast_size(static_cast<int>(M));
  const detail::DftMaximum m = detail::padded_dft_maximum(G, static_cast<int>(Lc), static_cast<int>(Kc), with_median);

  SinglePeak out;
  out.coarse_median = m.median;
  out.coarse_peak = m.magnitude;
  const long long lc = m.row;
  const long long kc = m.col;
  const long long l0 = std::llround(static_cast<double>(lc) * zr * N / Lc);
  const long long k0 = std::llround(static_cast<double>(kc) * zd * M / Kc);
  out.peak = zoom_peak(G, nu, zr, zd, l0, k0, signed_delay);
  return out;
}

Estimate to_range_velocity(double delay_s, double doppler_hz, const Vec3& tx_pos,
                           const Vec3& rx_pos, double carrier_freq_hz) {
  if (delay_s < 0.0)
    throw EstimationError(fmt::format("negative delay {:.6g} s after offset compensation", delay_s));
  Estimate e;
  const double baseline = (tx_pos - rx_pos).norm();
  e.range_m = 0.5 * (kSpeedOfLight * delay_s - baseline);
  e.velocity_mps = doppler_hz * kSpeedOfLight / (2.0 * carrier_freq_hz);
  return e;
}

}  // namespace isac
