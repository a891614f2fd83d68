#include "isac/signal_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "phasor.hpp"

namespace isac {

namespace {

using detail::phasor_ramp;

struct CellGeometry {
  double delay_s;
  double doppler_hz;
};

CellGeometry cell_geometry(const FusionLink& link, const Numerology& nu, const Vec2& p, double v,
                           const Vec3& heading) {
  const Vec3 pos = horizontal(p);
  return {bistatic_delay(link.tx_position_m, pos, link.rx_position_m),
          bistatic_doppler(pos, v * heading, link.tx_position_m, link.rx_position_m,
                           nu.carrier_freq_hz)};
}

/// |sum G conj(s)| for one link, using the separable form of s.
double link_score(const FusionLink& link, const CellGeometry& g) {
  const SymbolGrid& G = link.channel->values;
  const Numerology& nu = link.channel->numerology;
  const Eigen::VectorXcd delay = phasor_ramp(G.rows(), nu.subcarrier_spacing_hz * g.delay_s, +1.0);
  const Eigen::VectorXcd doppler = phasor_ramp(G.cols(), nu.symbol_duration_s() * g.doppler_hz, -1.0);
  const Eigen::VectorXcd inner = G * doppler;
  return std::abs((delay.array() * inner.array()).sum());
}

void require_links(std::span<const FusionLink> links) {
  if (links.empty()) throw FusionError("signal fusion needs at least one link");
  for (const auto& l : links)
    if (!l.channel) throw FusionError("signal fusion link without a channel matrix");
}

/// Smallest order K whose Taylor remainder x^(K+1)/(K+1)! is below 1e-15.
int taylor_order(double x) {
  double term = 1.0;
  for (int k = 0; k < 80; ++k) {
    term *= x / (k + 1);
    if (term < 1e-15) return k;
  }
  return -1;
}

/// Position scores of one link at a fixed velocity, batched over cells.
void accumulate_link_positions(const FusionLink& link, std::span<const Vec2> cells, double v,
                               const Vec3& heading, std::vector<double>& scores) {
  const SymbolGrid& G = link.channel->values;
  const Numerology& nu = link.channel->numerology;
  const Eigen::Index N = G.rows();
  const Eigen::Index M = G.cols();
  const Eigen::Index C = static_cast<Eigen::Index>(cells.size());
  const double T = nu.symbol_duration_s();

  std::vector<CellGeometry> geo(cells.size());
  double fmin = std::numeric_limits<double>::infinity();
  double fmax = -fmin;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    geo[c] = cell_geometry(link, nu, cells[c], v, heading);
    fmin = std::min(fmin, geo[c].doppler_hz);
    fmax = std::max(fmax, geo[c].doppler_hz);
  }
  const double fref = 0.5 * (fmin + fmax);
  const double m0 = 0.5 * static_cast<double>(M - 1);
  const double x = kTwoPi * T * m0 * 0.5 * (fmax - fmin);
  const int K = taylor_order(x);
  if (K < 0 || K > 40) {
    for (std::size_t c = 0; c < cells.size(); ++c) scores[c] += link_score(link, geo[c]);
    return;
  }

  // E(m, k) = exp(-j2pi m T fref) (-j2pi (m - m0) T)^k / k!
  Eigen::MatrixXcd E(M, K + 1);
  const Eigen::VectorXcd base = phasor_ramp(M, T * fref, -1.0);
  for (Eigen::Index m = 0; m < M; ++m) {
    const cplx step{0.0, -kTwoPi * (static_cast<double>(m) - m0) * T};
    cplx term = base(m);
    for (int k = 0; k <= K; ++k) {
      E(m, k) = term;
      term *= step / static_cast<double>(k + 1);
    }
  }
  const Eigen::MatrixXcd H = G * E;

  Eigen::MatrixXcd Q(C, N);
  for (Eigen::Index c = 0; c < C; ++c)
    Q.row(c) = phasor_ramp(N, nu.subcarrier_spacing_hz * geo[c].delay_s, +1.0).transpose();
  const Eigen::MatrixXcd D = Q * H;

  for (Eigen::Index c = 0; c < C; ++c) {
    const double delta = geo[c].doppler_hz - fref;
    cplx acc = D(c, K);
    for (int k = K - 1; k >= 0; --k) acc = acc * delta + D(c, k);
    scores[c] += std::abs(acc);
  }
}

/// Velocity scores of one link at a fixed position; exact, since Doppler is linear in speed.
void accumulate_link_velocities(const FusionLink& link, const Vec2& p,
                                std::span<const double> velocities, const Vec3& heading,
                                std::vector<double>& scores) {
  const SymbolGrid& G = link.channel->values;
  const Numerology& nu = link.channel->numerology;
  const Vec3 pos = horizontal(p);
  const double tau = bistatic_delay(link.tx_position_m, pos, link.rx_position_m);
  const double per_mps =
      bistatic_doppler(pos, heading, link.tx_position_m, link.rx_position_m, nu.carrier_freq_hz);
  const Eigen::VectorXcd delay = phasor_ramp(G.rows(), nu.subcarrier_spacing_hz * tau, +1.0);
  const Eigen::VectorXcd w = G.transpose() * delay;
  for (std::size_t i = 0; i < velocities.size(); ++i) {
    const Eigen::VectorXcd doppler =
        phasor_ramp(G.cols(), nu.symbol_duration_s() * per_mps * velocities[i], -1.0);
    scores[i] += std::abs((w.array() * doppler.array()).sum());
  }
}

/// Score of one link as a polynomial in the delay and Doppler offsets from a reference cell.
///
/// With s = (tau - tau_ref) / tau_radius and t = (f - f_ref) / f_radius, the score is
/// |sum_{l,k} C(l, k) s^l t^k| up to a Taylor remainder below 1e-15 for |s|, |t| <= 1;
/// phases common to all terms are dropped since only the magnitude is used.
class LinkExpansion {
 public:
  static std::optional<LinkExpansion> build(const FusionLink& link, double tau_lo, double tau_hi,
                                            double f_lo, double f_hi) {
    const SymbolGrid& G = link.channel->values;
    const Numerology& nu = link.channel->numerology;
    const Eigen::Index N = G.rows();
    const Eigen::Index M = G.cols();
    const double T = nu.symbol_duration_s();
    LinkExpansion e;
    e.tau_ref_ = 0.5 * (tau_lo + tau_hi);
    e.f_ref_ = 0.5 * (f_lo + f_hi);
    e.tau_radius_ = std::max(0.5 * (tau_hi - tau_lo), 1e-18);
    e.f_radius_ = std::max(0.5 * (f_hi - f_lo), 1e-9);
    const double n0 = 0.5 * static_cast<double>(N - 1);
    const double m0 = 0.5 * static_cast<double>(M - 1);
    const int L = taylor_order(kTwoPi * nu.subcarrier_spacing_hz * n0 * e.tau_radius_);
    const int K = taylor_order(kTwoPi * T * m0 * e.f_radius_);
    if (L < 0 || K < 0 || L > kMaxOrder || K > kMaxOrder) return std::nullopt;

    const Eigen::VectorXcd a = phasor_ramp(N, nu.subcarrier_spacing_hz * e.tau_ref_, +1.0);
    Eigen::MatrixXcd A(N, L + 1);
    for (Eigen::Index n = 0; n < N; ++n) {
      const cplx step{0.0, kTwoPi * (static_cast<double>(n) - n0) * nu.subcarrier_spacing_hz * e.tau_radius_};
      cplx term = a(n);
      for (int l = 0; l <= L; ++l) {
        A(n, l) = term;
        term *= step / static_cast<double>(l + 1);
      }
    }
    const Eigen::VectorXcd b = phasor_ramp(M, T * e.f_ref_, -1.0);
    Eigen::MatrixXcd B(M, K + 1);
    for (Eigen::Index m = 0; m < M; ++m) {
      const cplx step{0.0, -kTwoPi * (static_cast<double>(m) - m0) * T * e.f_radius_};
      cplx term = b(m);
      for (int k = 0; k <= K; ++k) {
        B(m, k) = term;
        term *= step / static_cast<double>(k + 1);
      }
    }
    e.C_ = A.transpose() * (G * B);
    return e;
  }

  /// nullopt when the cell lies outside the expansion's validity box.
  std::optional<double> score(const CellGeometry& g) const {
    const double s = (g.delay_s - tau_ref_) / tau_radius_;
    const double t = (g.doppler_hz - f_ref_) / f_radius_;
    if (!(std::abs(s) <= 1.0) || !(std::abs(t) <= 1.0)) return std::nullopt;
    const Eigen::Index L = C_.rows() - 1;
    const Eigen::Index K = C_.cols() - 1;
    cplx acc{0.0, 0.0};
    for (Eigen::Index l = L; l >= 0; --l) {
      cplx row = C_(l, K);
      for (Eigen::Index k = K - 1; k >= 0; --k) row = row * t + C_(l, k);
      acc = acc * s + row;
    }
    return std::abs(acc);
  }

 private:
  static constexpr int kMaxOrder = 64;
  double tau_ref_ = 0.0;
  double f_ref_ = 0.0;
  double tau_radius_ = 0.0;
  double f_radius_ = 0.0;
  Eigen::MatrixXcd C_;
};

/// Scores for iterative_refine. With the Taylor engine each link gets one expansion covering
/// every hypothesis the refinement can visit; cells outside it are scored directly.
class RefineScorer {
 public:
  RefineScorer(std::span<const FusionLink> links, const ConfidenceRegion& region,
               const ConfidenceInterval& interval, const Vec3& heading, ScoreEngine engine)
      : links_(links), heading_(heading), engine_(engine) {
    if (engine != ScoreEngine::taylor) return;
    constexpr int kSamples = 9;
    constexpr double kPad = 1.25;
    const double vlo = interval.center_mps - interval.half_width_mps;
    const double vhi = interval.center_mps + interval.half_width_mps;
    for (const auto& link : links) {
      const Numerology& nu = link.channel->numerology;
      double tlo = std::numeric_limits<double>::infinity();
      double thi = -tlo;
      double flo = tlo;
      double fhi = -tlo;
      for (int i = 0; i < kSamples; ++i)
        for (int j = 0; j < kSamples; ++j) {
          const Vec2 off{(2.0 * i / (kSamples - 1) - 1.0) * region.half_widths_m.x(),
                         (2.0 * j / (kSamples - 1) - 1.0) * region.half_widths_m.y()};
          for (double v : {vlo, vhi}) {
            const CellGeometry g = cell_geometry(link, nu, region.center_m + off, v, heading);
            tlo = std::min(tlo, g.delay_s);
            thi = std::max(thi, g.delay_s);
            flo = std::min(flo, g.doppler_hz);
            fhi = std::max(fhi, g.doppler_hz);
          }
        }
      const double tc = 0.5 * (tlo + thi);
      const double tr = 0.5 * kPad * (thi - tlo);
      const double fc = 0.5 * (flo + fhi);
      const double fr = 0.5 * kPad * (fhi - flo);
      expansions_.push_back(LinkExpansion::build(link, tc - tr, tc + tr, fc - fr, fc + fr));
    }
  }

  std::vector<double> positions(std::span<const Vec2> cells, double v) const {
    if (engine_ == ScoreEngine::direct) return score_positions(links_, cells, v, heading_, engine_);
    std::vector<double> scores(cells.size(), 0.0);
    for (std::size_t i = 0; i < links_.size(); ++i) {
      const FusionLink& link = links_[i];
      if (!expansions_[i]) {
        accumulate_link_positions(link, cells, v, heading_, scores);
        continue;
      }
      for (std::size_t c = 0; c < cells.size(); ++c)
        scores[c] += link_or_expansion(i, cell_geometry(link, link.channel->numerology, cells[c], v, heading_));
    }
    return scores;
  }

  std::vector<double> velocities(const Vec2& p, std::span<const double> vs) const {
    if (engine_ == ScoreEngine::direct) return score_velocities(links_, p, vs, heading_, engine_);
    std::vector<double> scores(vs.size(), 0.0);
    for (std::size_t i = 0; i < links_.size(); ++i) {
      const FusionLink& link = links_[i];
      if (!expansions_[i]) {
        accumulate_link_velocities(link, p, vs, heading_, scores);
        continue;
      }
      for (std::size_t k = 0; k < vs.size(); ++k)
        scores[k] += link_or_expansion(i, cell_geometry(link, link.channel->numerology, p, vs[k], heading_));
    }
    return scores;
  }

 private:
  double link_or_expansion(std::size_t i, const CellGeometry& g) const {
    if (const auto s = expansions_[i]->score(g)) return *s;
    return link_score(links_[i], g);
  }

  std::span<const FusionLink> links_;
  Vec3 heading_;
  ScoreEngine engine_;
  std::vector<std::optional<LinkExpansion>> expansions_;
};

std::vector<double> cell_centers(double center, double half_width, int count) {
  std::vector<double> out(count);
  const double pitch = 2.0 * half_width / count;
  for (int i = 0; i < count; ++i) out[i] = center - half_width + (i + 0.5) * pitch;
  return out;
}

double clamp_center(double center, double half_width, double lo, double hi) {
  return std::clamp(center, lo + half_width, hi - half_width);
}

}  // namespace

SymbolGrid steering_signature(const Numerology& nu, const Vec3& tx, const Vec3& rx, const Vec2& p,
                              double v, const Vec3& heading) {
  const Vec3 pos = horizontal(p);
  const double tau = bistatic_delay(tx, pos, rx);
  const double fd = bistatic_doppler(pos, v * heading, tx, rx, nu.carrier_freq_hz);
  const Eigen::VectorXcd a = phasor_ramp(nu.num_subcarriers, nu.subcarrier_spacing_hz * tau, -1.0);
  const Eigen::VectorXcd b = phasor_ramp(nu.num_symbols, nu.symbol_duration_s() * fd, +1.0);
  return a * b.transpose();
}

double hypothesis_score(std::span<const FusionLink> links, const Vec2& p, double v,
                        const Vec3& heading) {
  require_links(links);
  double score = 0.0;
  for (const auto& link : links)
    score += link_score(link, cell_geometry(link, link.channel->numerology, p, v, heading));
  return score;
}

std::vector<double> score_positions(std::span<const FusionLink> links, std::span<const Vec2> cells,
                                    double v, const Vec3& heading, ScoreEngine engine) {
  require_links(links);
  std::vector<double> scores(cells.size(), 0.0);
  if (engine == ScoreEngine::direct) {
    for (std::size_t c = 0; c < cells.size(); ++c) scores[c] = hypothesis_score(links, cells[c], v, heading);
    return scores;
  }
  for (const auto& link : links) accumulate_link_positions(link, cells, v, heading, scores);
  return scores;
}

std::vector<double> score_velocities(std::span<const FusionLink> links, const Vec2& p,
                                     std::span<const double> velocities, const Vec3& heading,
                                     ScoreEngine engine) {
  require_links(links);
  std::vector<double> scores(velocities.size(), 0.0);
  if (engine == ScoreEngine::direct) {
    for (std::size_t i = 0; i < velocities.size(); ++i)
      scores[i] = hypothesis_score(links, p, velocities[i], heading);
    return scores;
  }
  for (const auto& link : links) accumulate_link_velocities(link, p, velocities, heading, scores);
  return scores;
}

FusionResult iterative_refine(std::span<const FusionLink> links, const ConfidenceRegion& region,
                              const ConfidenceInterval& interval, const RefineParams& params) {
  require_links(links);
  if (!(region.half_widths_m.x() > 0.0) || !(region.half_widths_m.y() > 0.0))
    throw FusionError("iterative_refine: empty confidence region");
  if (!(interval.half_width_mps > 0.0)) throw FusionError("iterative_refine: empty velocity interval");
  if (params.grid < 1 || params.max_iterations < 1 || !(params.shrink_cells > 0.0))
    throw FusionError("iterative_refine: invalid parameters");

  const int P = params.grid;
  const Vec2 lo = region.center_m - region.half_widths_m;
  const Vec2 hi = region.center_m + region.half_widths_m;
  const double vlo = interval.center_mps - interval.half_width_mps;
  const double vhi = interval.center_mps + interval.half_width_mps;

  FusionResult result;
  ConfidenceRegion cur = region;
  ConfidenceInterval cur_v = interval;
  Vec2 best_p = region.center_m;
  double best_v = interval.center_mps;
  double best_s = -std::numeric_limits<double>::infinity();

  const RefineScorer scorer(links, region, interval, params.heading, params.engine);
  std::vector<Vec2> cells(static_cast<std::size_t>(P) * P);
  for (int it = 1; it <= params.max_iterations; ++it) {
    const double v_fixed = cur_v.center_mps;
    const auto xs = cell_centers(cur.center_m.x(), cur.half_widths_m.x(), P);
    const auto ys = cell_centers(cur.center_m.y(), cur.half_widths_m.y(), P);
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j) cells[static_cast<std::size_t>(i) * P + j] = {xs[i], ys[j]};
    const auto pos_scores = scorer.positions(cells, v_fixed);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < cells.size(); ++c)
      if (pos_scores[c] > pos_scores[arg]) arg = c;
    if (pos_scores[arg] > best_s) {
      best_s = pos_scores[arg];
      best_p = cells[arg];
      best_v = v_fixed;
    }

    const auto vs = cell_centers(cur_v.center_mps, cur_v.half_width_mps, P);
    const auto vel_scores = scorer.velocities(best_p, vs);
    std::size_t varg = 0;
    for (std::size_t k = 1; k < vs.size(); ++k)
      if (vel_scores[k] > vel_scores[varg]) varg = k;
    if (vel_scores[varg] > best_s) {
      best_s = vel_scores[varg];
      best_v = vs[varg];
    }

    result.trace.push_back({cur, cur_v, best_p, best_v, best_s});
    result.iterations = it;
    result.final_cell_m = 2.0 * cur.half_widths_m / P;
    result.final_velocity_cell_mps = 2.0 * cur_v.half_width_mps / P;
    if (result.final_cell_m.x() <= params.position_tol_m &&
        result.final_cell_m.y() <= params.position_tol_m &&
        result.final_velocity_cell_mps <= params.velocity_tol_mps)
      break;

    Vec2 hw = (params.shrink_cells * result.final_cell_m).cwiseMin(region.half_widths_m);
    cur.half_widths_m = hw;
    cur.center_m = {clamp_center(best_p.x(), hw.x(), lo.x(), hi.x()),
                    clamp_center(best_p.y(), hw.y(), lo.y(), hi.y())};
    const double hv = std::min(params.shrink_cells * result.final_velocity_cell_mps,
                               interval.half_width_mps);
    cur_v.half_width_mps = hv;
    cur_v.center_mps = clamp_center(best_v, hv, vlo, vhi);
  }

  result.position_m = best_p;
  result.velocity_mps = best_v;
  result.score = best_s;
  return result;
}

}  // namespace isac
