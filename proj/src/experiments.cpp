#include "isac/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "isac/beam_registration.hpp"
#include "isac/cscc_fusion.hpp"
#include "isac/csv.hpp"
#include "isac/data_fusion.hpp"
#include "isac/echo_channel.hpp"
#include "isac/ofdm_grid.hpp"
#include "isac/rd_estimation.hpp"
#include "isac/rng.hpp"
#include "isac/signal_fusion.hpp"

namespace isac {

std::size_t SweepResult::column(const std::string& name) const {
  for (std::size_t i = 0; i < metric_columns.size(); ++i)
    if (metric_columns[i] == name) return i;
  throw std::out_of_range("no metric column " + name);
}

TrialError::TrialError(int trial, const std::string& what)
    : std::runtime_error(fmt::format("trial {}: {}", trial, what)), trial_(trial) {}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs fn(0..count-1) on a pool; the error of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto body = [&] {
    for (int i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, std::max(count, 1));
  if (n == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(body);
  }
  for (int i = 0; i < count; ++i) {
    if (!errors[static_cast<std::size_t>(i)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
    } catch (const TrialError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrialError(i, e.what());
    }
  }
}

struct Moments {
  double rms = kNaN;
  double rms_se = kNaN;
  double ms = kNaN;
  double ms_se = kNaN;
  int count = 0;
};

/// Mean square and RMS of the finite errors, with standard errors (delta method for RMS).
Moments moments(const std::vector<double>& errors, double scale = 1.0) {
  std::vector<double> sq;
  for (double e : errors)
    if (std::isfinite(e)) sq.push_back(e * e / (scale * scale));
  Moments m;
  m.count = static_cast<int>(sq.size());
  if (sq.empty()) return m;
  double mean = 0.0;
  for (double s : sq) mean += s;
  mean /= static_cast<double>(sq.size());
  double var = 0.0;
  for (double s : sq) var += (s - mean) * (s - mean);
  var = sq.size() > 1 ? var / static_cast<double>(sq.size() - 1) : 0.0;
  m.ms = mean;
  m.ms_se = std::sqrt(var / static_cast<double>(sq.size()));
  m.rms = std::sqrt(mean);
  m.rms_se = mean > 0.0 ? m.ms_se / (2.0 * m.rms) : 0.0;
  return m;
}

double fraction(const std::vector<double>& flags) {
  double s = 0.0;
  int n = 0;
  for (double f : flags)
    if (std::isfinite(f)) {
      s += f;
      ++n;
    }
  return n > 0 ? s / n : kNaN;
}

std::size_t site_index(const ScenarioConfig& c, int id) {
  for (std::size_t i = 0; i < c.sites.size(); ++i)
    if (c.sites[i].id == id) return i;
  throw ScenarioError(fmt::format("site id {} does not exist", id));
}

/// One transmitted frame per site, from that site's payload stream.
std::vector<TxFrame> frames_for_trial(const ScenarioConfig& c, int trial) {
  std::vector<TxFrame> frames;
  frames.reserve(c.sites.size());
  for (std::size_t s = 0; s < c.sites.size(); ++s) {
    RngStream rng = derive_rng_stream(c.master_seed, static_cast<std::uint64_t>(trial),
                                      StreamPurpose::payload, static_cast<std::uint32_t>(s));
    frames.push_back(generate_frame(c.numerology, rng));
  }
  return frames;
}

SymbolGrid noise_for(const ScenarioConfig& c, int trial, std::size_t link_index) {
  RngStream rng = derive_rng_stream(c.master_seed, static_cast<std::uint64_t>(trial),
                                    StreamPurpose::noise, static_cast<std::uint32_t>(link_index));
  return unit_noise(c.numerology.num_subcarriers, c.numerology.num_symbols, rng);
}

void require_pipeline(const ScenarioConfig& c, Pipeline p, const std::string& sweep) {
  if (c.experiment.pipeline != p)
    throw ScenarioError(fmt::format("experiment.pipeline: expected {} for this experiment, got {}",
                                    to_string(p), to_string(c.experiment.pipeline)));
  if (c.experiment.sweep.variable != sweep)
    throw ScenarioError(fmt::format("experiment.sweep_variable: expected {} for this experiment, got {}",
                                    sweep, c.experiment.sweep.variable));
}

SweepResult make_result(const ScenarioConfig& c, const std::string& sweep_column) {
  SweepResult r;
  r.sweep_variable = sweep_column;
  r.sweep_values = c.experiment.sweep.values();
  r.trials = c.trials;
  r.seed = c.master_seed;
  r.config_hash = scenario_hash(c);
  return r;
}

// ---------------------------------------------------------------------------
// Cooperative active sensing

struct ActivePoint {
  double err_single = kNaN;
  double err_data = kNaN;
  double err_signal = kNaN;
  double verr_single = kNaN;
  double verr_data = kNaN;
  double verr_signal = kNaN;
  double region_hit = kNaN;
  double interval_hit = kNaN;
};

SweepResult run_cooperative_active(const ScenarioConfig& c, const RunOptions& options) {
  if (c.targets.size() != 1) throw ScenarioError("cooperative_active needs exactly one target");
  if (c.links.size() < 3) throw ScenarioError("cooperative_active needs at least 3 links");
  for (const auto& l : c.links)
    if (!l.monostatic()) throw ScenarioError("cooperative_active uses monostatic links only");
  const std::string& var = c.experiment.sweep.variable;
  if (var != "snr_db" && var != "none")
    throw ScenarioError("experiment.sweep_variable: cooperative_active sweeps snr_db or none");

  SweepResult result = make_result(c, var == "none" ? "point" : "snr_db");
  result.metric_columns = {"rmse_range_single_m",       "rmse_range_data_m",
                           "rmse_range_signal_m",       "rmse_range_single_se_m",
                           "rmse_range_data_se_m",      "rmse_range_signal_se_m",
                           "rmse_velocity_single_mps",  "rmse_velocity_data_mps",
                           "rmse_velocity_signal_mps",  "rmse_velocity_single_se_mps",
                           "rmse_velocity_data_se_mps", "rmse_velocity_signal_se_mps",
                           "region_coverage",           "interval_coverage"};

  const Numerology& nu = c.numerology;
  const ExperimentSpec& e = c.experiment;
  const Target& target = c.targets.front();
  const Vec3 heading = target.heading();
  const std::size_t L = c.links.size();
  const std::vector<double> points = result.sweep_values;
  const std::size_t P = points.size();

  std::vector<Vec3> bs(L);
  std::vector<std::size_t> tx_index(L);
  std::vector<double> true_range(L);
  std::vector<double> true_los(L);  // heading . unit(bs - target)
  for (std::size_t i = 0; i < L; ++i) {
    tx_index[i] = site_index(c, c.links[i].tx_site_id);
    bs[i] = c.sites[tx_index[i]].position_m;
    true_range[i] = (target.position_m - bs[i]).norm();
    true_los[i] = heading.dot((bs[i] - target.position_m).normalized());
  }
  const Vec2 true_pos = target.position_m.head<2>();
  const double true_speed = target.speed_mps();

  RefineParams rp;
  rp.grid = e.refine_grid;
  rp.shrink_cells = e.refine_shrink_cells;
  rp.max_iterations = e.refine_max_iterations;
  rp.position_tol_m = e.refine_position_tol_m;
  rp.velocity_tol_mps = e.refine_velocity_tol_mps;
  rp.heading = heading;

  std::vector<std::vector<ActivePoint>> out(static_cast<std::size_t>(c.trials), std::vector<ActivePoint>(P));

  parallel_for(c.trials, options.workers, [&](int t) {
    const std::vector<TxFrame> frames = frames_for_trial(c, t);
    // rx / tx = H + sigma * w / tx, so the noise is divided by the payload once per trial
    // and each sweep point only rescales it.
    std::vector<SymbolGrid> H(L);
    std::vector<SymbolGrid> W(L);
    for (std::size_t i = 0; i < L; ++i) {
      H[i] = link_response(nu, c.links[i], c.sites, c.targets);
      W[i] = noise_for(c, t, i).cwiseQuotient(frames[tx_index[i]].symbols);
    }
    for (std::size_t j = 0; j < P; ++j) {
      std::vector<ChannelMatrix> G;
      std::vector<Estimate> est;
      std::vector<double> weights;
      G.reserve(L);
      for (std::size_t i = 0; i < L; ++i) {
        LinkSpec link = c.links[i];
        if (var == "snr_db") link.snr_db = points[j];
        const double sigma = std::sqrt(noise_variance_for(link, c.targets));
        G.push_back({sigma > 0.0 ? SymbolGrid(H[i] + sigma * W[i]) : H[i], link, nu});
        if (t == 0 && j == 0 && i == 0 && options.dump_rdmap)
          write_rdmap_csv(*options.dump_rdmap,
                          range_doppler_map(G.back(), e.zero_pad_range, e.zero_pad_doppler));
        const SinglePeak sp = find_single_peak(G.back().values, nu, e.zero_pad_range, e.zero_pad_doppler, false, false);
        Estimate es = to_range_velocity(sp.peak.delay_s, sp.peak.doppler_hz, bs[i], bs[i], nu.carrier_freq_hz);
        es.score = sp.peak.score;
        es.tx_site_id = es.rx_site_id = link.tx_site_id;
        es.snr_db = link.snr_db;
        est.push_back(es);
        weights.push_back(std::isinf(link.snr_db) ? 1.0 : db_to_linear(link.snr_db));
      }
      double wsum = 0.0;
      for (double w : weights) wsum += w;
      double truth = 0.0;
      for (std::size_t i = 0; i < L; ++i) truth += weights[i] / wsum * true_range[i];

      ActivePoint& ap = out[static_cast<std::size_t>(t)][j];
      ap.err_single = est[0].range_m - true_range[0];
      ap.verr_single = est[0].velocity_mps / true_los[0] - true_speed;

      const Estimate fused = weighted_average(est, weights);
      ap.err_data = fused.range_m - truth;
      std::vector<RangeObservation> obs;
      for (std::size_t i = 0; i < L; ++i) obs.push_back({bs[i], est[i].range_m});
      const Multilateration fix = multilaterate(obs);
      // Weighted least squares of v_r,i = v * los_i, so links nearly perpendicular to the
      // heading carry little weight instead of dividing by a small projection.
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < L; ++i) {
        const double los = heading.dot((bs[i] - horizontal(fix.position_m)).normalized());
        num += weights[i] * est[i].velocity_mps * los;
        den += weights[i] * los * los;
      }
      if (!(den > 0.0)) throw FusionError("heading is perpendicular to every line of sight");
      const double speed_data = num / den;
      ap.verr_data = speed_data - true_speed;

      const ConfidenceRegion region = build_confidence_region(fix.position_m, nu.range_resolution_m(), e.kappa);
      const ConfidenceInterval interval =
          build_confidence_interval(speed_data, nu.velocity_resolution_mps(), e.kappa);
      ap.region_hit = region.contains(true_pos) ? 1.0 : 0.0;
      ap.interval_hit = interval.contains(true_speed) ? 1.0 : 0.0;

      std::vector<FusionLink> links;
      for (std::size_t i = 0; i < L; ++i) links.push_back({&G[i], bs[i], bs[i]});
      const FusionResult fr = iterative_refine(links, region, interval, rp);
      double implied = 0.0;
      for (std::size_t i = 0; i < L; ++i)
        implied += weights[i] / wsum * (horizontal(fr.position_m) - bs[i]).norm();
      ap.err_signal = implied - truth;
      ap.verr_signal = fr.velocity_mps - true_speed;
    }
  });

  for (std::size_t j = 0; j < P; ++j) {
    std::vector<double> es, ed, eg, vs, vd, vg, rh, ih;
    for (const auto& trial : out) {
      const ActivePoint& a = trial[j];
      es.push_back(a.err_single);
      ed.push_back(a.err_data);
      eg.push_back(a.err_signal);
      vs.push_back(a.verr_single);
      vd.push_back(a.verr_data);
      vg.push_back(a.verr_signal);
      rh.push_back(a.region_hit);
      ih.push_back(a.interval_hit);
    }
    const Moments ms = moments(es), md = moments(ed), mg = moments(eg);
    const Moments us = moments(vs), ud = moments(vd), ug = moments(vg);
    result.metrics.push_back({ms.rms, md.rms, mg.rms, ms.rms_se, md.rms_se, mg.rms_se, us.rms, ud.rms, ug.rms,
                              us.rms_se, ud.rms_se, ug.rms_se, fraction(rh), fraction(ih)});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cooperative active and passive sensing

struct PassivePoint {
  double err_active = kNaN;
  double err_passive = kNaN;
  double err_coop = kNaN;
  double err_genie = kNaN;
  double to_est = kNaN;
  double cfo_est = kNaN;
  double to_err = kNaN;
  LinkPeak active_peak;
  std::optional<LinkPeak> nominal_peak;  ///< passive link compensated with the configured offsets
};

double median_excluding(const std::vector<double>& values, std::size_t skip) {
  std::vector<double> v;
  v.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (i != skip && std::isfinite(values[i])) v.push_back(values[i]);
  if (v.empty()) return kNaN;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  return 0.5 * (hi + *std::max_element(v.begin(), mid));
}

SweepResult run_active_passive(const ScenarioConfig& c, const RunOptions& options) {
  if (c.targets.size() != 1) throw ScenarioError("active_passive needs exactly one target");
  if (c.links.size() != 2) throw ScenarioError("active_passive needs one monostatic and one bistatic link");
  const std::size_t ia = c.links[0].monostatic() ? 0 : 1;
  const std::size_t ip = 1 - ia;
  const LinkSpec& active_link = c.links[ia];
  const LinkSpec& passive_link = c.links[ip];
  if (!active_link.monostatic() || passive_link.monostatic())
    throw ScenarioError("active_passive needs one monostatic and one bistatic link");
  if (passive_link.rx_site_id != active_link.tx_site_id)
    throw ScenarioError("active_passive: the passive link must be received at the active site");
  const std::string& var = c.experiment.sweep.variable;
  if (var != "passive_snr_db" && var != "none")
    throw ScenarioError("experiment.sweep_variable: active_passive sweeps passive_snr_db or none");

  SweepResult result = make_result(c, var == "none" ? "point" : "passive_snr_db");
  result.metric_columns = {"nmse_active",       "nmse_passive",        "nmse_cooperative",
                           "nmse_active_se",    "nmse_passive_se",     "nmse_cooperative_se",
                           "nmse_genie",        "nmse_genie_se",       "cscc_timing_rmse_s",
                           "cscc_failures"};

  const Numerology& nu = c.numerology;
  const ExperimentSpec& e = c.experiment;
  const Target& target = c.targets.front();
  const std::size_t sa = site_index(c, active_link.tx_site_id);
  const std::size_t sb = site_index(c, passive_link.tx_site_id);

  PassiveGeometry geo;
  geo.active_site_m = c.sites[sa].position_m;
  geo.passive_tx_m = c.sites[sb].position_m;
  geo.bearing = (target.position_m - geo.active_site_m).normalized();
  geo.heading = target.heading();
  geo.carrier_freq_hz = nu.carrier_freq_hz;
  const double true_range = (target.position_m - geo.active_site_m).norm();
  const OffsetEstimate nominal{passive_link.sync_error.timing_offset_s, passive_link.sync_error.cfo_hz, 0.0, 0.0};

  const std::vector<double> points = result.sweep_values;
  const std::size_t P = points.size();
  const int T = c.trials;
  const int zr = e.zero_pad_range;
  const int zd = e.zero_pad_doppler;

  struct TrialChannels {
    std::vector<TxFrame> frames;
    SymbolGrid Ha, Hp, Wa, Wp;
    LinkSpec realized;
  };
  auto channels_for = [&](int t) {
    TrialChannels tc;
    tc.frames = frames_for_trial(c, t);
    RngStream jitter = derive_rng_stream(c.master_seed, static_cast<std::uint64_t>(t),
                                         StreamPurpose::geometry_jitter, static_cast<std::uint32_t>(ip));
    tc.realized = realize_sync(passive_link, jitter);
    tc.Ha = link_response(nu, active_link, c.sites, c.targets);
    tc.Hp = link_response(nu, tc.realized, c.sites, c.targets);
    tc.Wa = noise_for(c, t, ia);
    tc.Wp = noise_for(c, t, ip);
    return tc;
  };
  auto grids_for = [&](const TrialChannels& tc, double point) {
    LinkSpec pl = tc.realized;
    if (var == "passive_snr_db") pl.snr_db = point;
    const RxSymbolMatrix ra =
        compose_echo(tc.frames[sa], tc.Ha, &tc.Wa, active_link, noise_variance_for(active_link, c.targets));
    const RxSymbolMatrix rp = compose_echo(tc.frames[sb], tc.Hp, &tc.Wp, pl, noise_variance_for(pl, c.targets));
    return std::make_pair(channel_quotient(ra, tc.frames[sa]), channel_quotient(rp, tc.frames[sb]));
  };

  std::vector<std::vector<PassivePoint>> out(static_cast<std::size_t>(T), std::vector<PassivePoint>(P));

  // Per-frame estimates: active ranging, CSCC offsets, passive ranging with the nominal offsets.
  parallel_for(T, options.workers, [&](int t) {
    const TrialChannels tc = channels_for(t);
    for (std::size_t j = 0; j < P; ++j) {
      const auto [Ga, Gp] = grids_for(tc, points[j]);
      if (t == 0 && j == 0 && options.dump_rdmap)
        write_rdmap_csv(*options.dump_rdmap, range_doppler_map(Ga, zr, zd));
      PassivePoint& pp = out[static_cast<std::size_t>(t)][j];
      pp.active_peak = measure_link(Ga, zr, zd);
      const double ra = 0.5 * kSpeedOfLight * pp.active_peak.peak.delay_s;
      pp.err_active = ra - true_range;
      const double speed = geo.speed_from_active_doppler(ra, pp.active_peak.peak.doppler_hz);
      try {
        const OffsetEstimate off = cross_correlate(Ga, Gp, predicted_difference(geo, ra, speed), zr, zd);
        pp.to_est = off.timing_offset_s;
        pp.cfo_est = off.cfo_hz;
        pp.to_err = off.timing_offset_s - tc.realized.sync_error.timing_offset_s;
      } catch (const CsccError&) {
      }
      try {
        const LinkPeak p = measure_link(compensate(Gp, nominal), zr, zd);
        pp.nominal_peak = p;
        pp.err_passive = geo.range_from_passive_delay(p.peak.delay_s) - true_range;
      } catch (const CsccError&) {
      }
    }
  });

  // Offsets are a property of the link, so each frame uses the median of the other frames' estimates.
  std::vector<std::vector<OffsetEstimate>> agg(static_cast<std::size_t>(T), std::vector<OffsetEstimate>(P));
  for (std::size_t j = 0; j < P; ++j) {
    std::vector<double> to(static_cast<std::size_t>(T));
    std::vector<double> cfo(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      to[static_cast<std::size_t>(t)] = out[static_cast<std::size_t>(t)][j].to_est;
      cfo[static_cast<std::size_t>(t)] = out[static_cast<std::size_t>(t)][j].cfo_est;
    }
    for (int t = 0; t < T; ++t) {
      const std::size_t skip = T > 1 ? static_cast<std::size_t>(t) : std::numeric_limits<std::size_t>::max();
      agg[static_cast<std::size_t>(t)][j] = {median_excluding(to, skip), median_excluding(cfo, skip), 0.0, 0.0};
    }
  }

  parallel_for(T, options.workers, [&](int t) {
    const TrialChannels tc = channels_for(t);
    for (std::size_t j = 0; j < P; ++j) {
      PassivePoint& pp = out[static_cast<std::size_t>(t)][j];
      const OffsetEstimate& off = agg[static_cast<std::size_t>(t)][j];
      const auto [Ga, Gp] = grids_for(tc, points[j]);
      if (pp.nominal_peak) {
        try {
          const FusedRange fr =
              fuse_active_passive(Ga, pp.active_peak, compensate(Gp, nominal), *pp.nominal_peak, geo, zr);
          pp.err_genie = fr.estimate.range_m - true_range;
        } catch (const CsccError&) {
        }
      }
      if (!std::isfinite(off.timing_offset_s) || !std::isfinite(off.cfo_hz)) {
        pp.err_coop = pp.err_active;
        continue;
      }
      const ChannelMatrix Gc = compensate(Gp, off);
      try {
        const FusedRange fr = fuse_active_passive(Ga, pp.active_peak, Gc, measure_link(Gc, zr, zd), geo, zr);
        pp.err_coop = fr.estimate.range_m - true_range;
      } catch (const CsccError&) {
        pp.err_coop = pp.err_active;
      }
    }
  });

  for (std::size_t j = 0; j < P; ++j) {
    std::vector<double> ea, ep, ec, eg, te;
    double failures = 0.0;
    for (const auto& trial : out) {
      ea.push_back(trial[j].err_active);
      ep.push_back(trial[j].err_passive);
      ec.push_back(trial[j].err_coop);
      eg.push_back(trial[j].err_genie);
      te.push_back(trial[j].to_err);
      if (!std::isfinite(trial[j].to_est)) failures += 1.0;
    }
    const Moments ma = moments(ea, true_range), mp = moments(ep, true_range), mc = moments(ec, true_range);
    const Moments mg = moments(eg, true_range);
    result.metrics.push_back(
        {ma.ms, mp.ms, mc.ms, ma.ms_se, mp.ms_se, mc.ms_se, mg.ms, mg.ms_se, moments(te).rms, failures});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Beam registration

SweepResult run_beam_registration(const ScenarioConfig& c, const RunOptions& options) {
  if (c.sites.empty()) throw ScenarioError("beam_registration needs at least one site");
  const std::string& var = c.experiment.sweep.variable;
  if (var != "side_m" && var != "none")
    throw ScenarioError("experiment.sweep_variable: beam_registration sweeps side_m or none");
  SweepResult result = make_result(c, "side_m");
  result.metric_columns = {"gain_perfect", "gain_baba", "gain_conventional", "required_width_deg",
                           "realized_width_baba_deg", "efficiency_baba", "efficiency_conventional"};
  const ExperimentSpec& e = c.experiment;
  const std::size_t S = c.sites.size();
  const std::size_t P = result.sweep_values.size();
  constexpr double kDeg = 180.0 / kPi;

  struct Row {
    std::vector<double> metrics;
    std::vector<double> cut_baba;
    std::vector<double> cut_conventional;
  };
  std::vector<Row> rows(P);
  std::vector<double> cut_angles;
  {
    const ArrayGeometry a0 = ArrayGeometry::of(c.sites.front());
    const double hp = natural_hpbw(a0.rows, a0.spacing_wavelengths);
    for (int k = -400; k <= 400; ++k) cut_angles.push_back(k * hp / 40.0);
  }

  parallel_for(static_cast<int>(P), options.workers, [&](int j) {
    const SensingArea area{e.area_center_m, result.sweep_values[static_cast<std::size_t>(j)]};
    std::vector<double> ones(S, 1.0);
    std::vector<double> eb;
    std::vector<double> ec;
    Row& row = rows[static_cast<std::size_t>(j)];
    double width0 = 0.0;
    double realized0 = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const BsSite& site = c.sites[s];
      const ArrayGeometry array = ArrayGeometry::of(site);
      const double width = required_width(area, site.position_m);
      const auto [baba, metrics] = synth_baba(array, 0.0, 0.0, width, e.synthesis_grid_fraction);
      const BeamWeights conv = synth_conventional(array, 0.0, 0.0);
      eb.push_back(amplitude_efficiency(baba, site.position_m, area));
      ec.push_back(amplitude_efficiency(conv, site.position_m, area));
      if (s == 0) {
        width0 = width;
        realized0 = metrics.realized_width_rad;
        if (options.dump_pattern) {
          row.cut_baba = pattern_cut(baba, cut_angles);
          row.cut_conventional = pattern_cut(conv, cut_angles);
        }
      }
    }
    double mb = 0.0;
    double mc = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      mb += eb[s] / static_cast<double>(S);
      mc += ec[s] / static_cast<double>(S);
    }
    row.metrics = {fused_gain(ones), fused_gain(eb), fused_gain(ec), width0 * kDeg, realized0 * kDeg, mb, mc};
  });
  for (auto& r : rows) result.metrics.push_back(r.metrics);

  if (options.dump_pattern) {
    std::ofstream f(*options.dump_pattern, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write {}", options.dump_pattern->string()));
    f << "side_m,angle_deg,amplitude_baba,amplitude_conventional\n";
    for (std::size_t j = 0; j < P; ++j)
      for (std::size_t k = 0; k < cut_angles.size(); ++k)
        f << format_number(result.sweep_values[j]) << ',' << format_number(cut_angles[k] * kDeg) << ','
          << format_number(rows[j].cut_baba[k]) << ',' << format_number(rows[j].cut_conventional[k]) << '\n';
  }
  return result;
}

}  // namespace

ScenarioConfig effective_config(ScenarioConfig config, const RunOptions& options) {
  if (options.trials) config.trials = *options.trials;
  if (options.seed) config.master_seed = *options.seed;
  if (options.workers < 1) throw ScenarioError("--workers: must be >= 1");
  validate_scenario(config);
  return config;
}

SweepResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const ScenarioConfig c = effective_config(config, options);
  switch (c.experiment.pipeline) {
    case Pipeline::cooperative_active: return run_cooperative_active(c, options);
    case Pipeline::active_passive: return run_active_passive(c, options);
    case Pipeline::beam_registration: return run_beam_registration(c, options);
  }
  throw ScenarioError("unknown pipeline");
}

SweepResult exp_fig5(const ScenarioConfig& config, const RunOptions& options) {
  require_pipeline(config, Pipeline::beam_registration, "side_m");
  return run_scenario(config, options);
}

SweepResult exp_fig7(const ScenarioConfig& config, const RunOptions& options) {
  require_pipeline(config, Pipeline::cooperative_active, "snr_db");
  return run_scenario(config, options);
}

SweepResult exp_fig6(const ScenarioConfig& config, const RunOptions& options) {
  require_pipeline(config, Pipeline::active_passive, "passive_snr_db");
  return run_scenario(config, options);
}

}  // namespace isac
