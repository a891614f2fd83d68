#include "isac/beam_registration.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace isac {

namespace {

/// Element-space coefficients of a 1-D least-squares mask beam at broadside.
Eigen::VectorXcd line_synthesis(int n, double d, double width, double step, double hpbw) {
  std::vector<double> thetas;
  std::vector<double> targets;
  int inside = 0;
  const int smax = static_cast<int>(std::floor((kPi / 2.0) / step));
  for (int s = -smax; s <= smax; ++s) {
    const double th = s * step;
    if (std::abs(th) >= kPi / 2.0) continue;
    if (std::abs(th) <= width / 2.0) {
      thetas.push_back(th);
      targets.push_back(1.0);
      ++inside;
    } else if (std::abs(th) >= width / 2.0 + hpbw) {
      thetas.push_back(th);
      targets.push_back(0.0);
    }
  }
  if (inside < 8)
    throw BeamError(fmt::format("synthesis grid too coarse: {} samples inside the sector (need 8)", inside));

  // The real-valued mask is referenced to the array center; the pattern magnitude is
  // unchanged when the same coefficients are applied from element 0.
  const double center = (n - 1) / 2.0;
  Eigen::MatrixXcd A(static_cast<Eigen::Index>(thetas.size()), n);
  Eigen::VectorXcd b(static_cast<Eigen::Index>(thetas.size()));
  for (std::size_t s = 0; s < thetas.size(); ++s) {
    const double u = std::sin(thetas[s]);
    for (int p = 0; p < n; ++p)
      A(static_cast<Eigen::Index>(s), p) = std::polar(1.0, kTwoPi * d * (p - center) * u);
    b(static_cast<Eigen::Index>(s)) = targets[s];
  }
  const Eigen::VectorXcd c = A.colPivHouseholderQr().solve(b);
  // pattern = sum conj(w) a, so the weights are the conjugated coefficients.
  return c.conjugate();
}

Eigen::VectorXcd outer(const Eigen::VectorXcd& row_w, const Eigen::VectorXcd& col_w) {
  Eigen::VectorXcd w(row_w.size() * col_w.size());
  for (Eigen::Index p = 0; p < row_w.size(); ++p)
    for (Eigen::Index q = 0; q < col_w.size(); ++q) w(p * col_w.size() + q) = row_w(p) * col_w(q);
  return w;
}

void check_direction(double azimuth, double elevation) {
  if (!(std::abs(azimuth) < kPi / 2.0) || !(std::abs(elevation) < kPi / 2.0))
    throw BeamError("look direction outside the forward hemisphere");
}

}  // namespace

double natural_hpbw(int elements, double spacing_wavelengths) {
  return 0.886 / (elements * spacing_wavelengths);
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& array, double azimuth, double elevation) {
  check_direction(azimuth, elevation);
  const double u = std::cos(elevation) * std::sin(azimuth);
  const double v = std::sin(elevation);
  const double d = array.spacing_wavelengths;
  Eigen::VectorXcd a(array.size());
  for (int p = 0; p < array.rows; ++p)
    for (int q = 0; q < array.cols; ++q) a(p * array.cols + q) = std::polar(1.0, kTwoPi * d * (p * u + q * v));
  return a / std::sqrt(static_cast<double>(array.size()));
}

double pattern_amplitude(const BeamWeights& beam, double u, double v) {
  const ArrayGeometry& g = beam.array;
  const double d = g.spacing_wavelengths;
  cplx sum{0.0, 0.0};
  for (int p = 0; p < g.rows; ++p) {
    cplx row{0.0, 0.0};
    for (int q = 0; q < g.cols; ++q)
      row += std::conj(beam.weights(p * g.cols + q)) * std::polar(1.0, kTwoPi * d * q * v);
    sum += row * std::polar(1.0, kTwoPi * d * p * u);
  }
  return std::abs(sum);
}

std::vector<double> pattern_cut(const BeamWeights& beam, std::span<const double> angles_rad) {
  std::vector<double> out;
  out.reserve(angles_rad.size());
  for (double th : angles_rad) out.push_back(pattern_amplitude(beam, std::sin(th), 0.0));
  return out;
}

double required_width(const SensingArea& area, const Vec3& bs_position_m) {
  const double dist = (area.center_m - bs_position_m).norm();
  if (dist <= area.side_m / 2.0) throw BeamError("base station lies inside the sensing area");
  return 2.0 * std::atan(area.side_m / (2.0 * dist));
}

BeamWeights synth_conventional(const ArrayGeometry& array, double azimuth, double elevation) {
  return {steering_vector(array, azimuth, elevation), array};
}

PatternMetrics measure_pattern(const BeamWeights& beam, double sector_width_rad) {
  const double hpbw = natural_hpbw(beam.array.rows, beam.array.spacing_wavelengths);
  const double step = hpbw / 64.0;
  const int smax = static_cast<int>(std::floor((kPi / 2.0) / step)) - 1;
  std::vector<double> th;
  for (int s = -smax; s <= smax; ++s) th.push_back(s * step);
  const std::vector<double> amp = pattern_cut(beam, th);

  const double peak = *std::max_element(amp.begin(), amp.end());
  const double half = peak / std::sqrt(2.0);
  // Outermost half-power samples, so in-sector ripple does not split the beam.
  std::size_t lo = 0;
  while (amp[lo] < half) ++lo;
  std::size_t hi = amp.size() - 1;
  while (amp[hi] < half) --hi;
  auto crossing = [&](std::size_t in, std::size_t out) {
    const double t = (amp[in] - half) / (amp[in] - amp[out]);
    return th[in] + t * (th[out] - th[in]);
  };
  const double left = lo > 0 ? crossing(lo, lo - 1) : th.front();
  const double right = hi + 1 < amp.size() ? crossing(hi, hi + 1) : th.back();

  PatternMetrics m;
  m.realized_width_rad = right - left;
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < th.size(); ++i) {
    if (std::abs(th[i]) <= sector_width_rad / 2.0) {
      sum += amp[i];
      ++count;
    }
    if (std::abs(th[i]) >= sector_width_rad / 2.0 + hpbw)
      m.out_of_sector_peak_amplitude = std::max(m.out_of_sector_peak_amplitude, amp[i]);
  }
  m.in_sector_mean_amplitude = count > 0 ? sum / count : amp[th.size() / 2];
  return m;
}

std::pair<BeamWeights, PatternMetrics> synth_baba(const ArrayGeometry& array, double azimuth,
                                                  double elevation, double desired_width_rad,
                                                  double grid_fraction) {
  check_direction(azimuth, elevation);
  if (!(desired_width_rad >= 0.0)) throw BeamError("desired beam width must be >= 0");
  const double d = array.spacing_wavelengths;
  const double hpbw_r = natural_hpbw(array.rows, d);
  const double hpbw_c = natural_hpbw(array.cols, d);

  BeamWeights look_frame{Eigen::VectorXcd::Constant(array.size(), 1.0 / std::sqrt(array.size())), array};
  if (desired_width_rad > std::min(hpbw_r, hpbw_c)) {
    // An axis already wider than the request keeps uniform weights.
    auto axis = [&](int n, double hpbw) -> Eigen::VectorXcd {
      if (desired_width_rad <= hpbw) return Eigen::VectorXcd::Constant(n, 1.0);
      return line_synthesis(n, d, desired_width_rad, grid_fraction * hpbw, hpbw);
    };
    look_frame.weights = outer(axis(array.rows, hpbw_r), axis(array.cols, hpbw_c));
    look_frame.weights /= look_frame.weights.norm();
  }
  const PatternMetrics metrics = measure_pattern(look_frame, std::max(desired_width_rad, hpbw_r));

  const Eigen::VectorXcd steer = steering_vector(array, azimuth, elevation) * std::sqrt(array.size());
  BeamWeights out{look_frame.weights.cwiseProduct(steer), array};
  out.weights /= out.weights.norm();
  return {out, metrics};
}

double amplitude_efficiency(const BeamWeights& beam, const Vec3& bs, const SensingArea& area) {
  const double width = required_width(area, bs);
  const Vec3 e1 = (area.center_m - bs).normalized();
  Vec3 eu = Vec3::UnitZ().cross(e1);
  if (eu.norm() < 1e-12) eu = Vec3::UnitX();
  eu.normalize();
  const Vec3 ev = e1.cross(eu);

  constexpr int kGrid = 16;
  double sum = 0.0;
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      const double x = ((i + 0.5) / kGrid - 0.5) * area.side_m;
      const double y = ((j + 0.5) / kGrid - 0.5) * area.side_m;
      const Vec3 dir = (area.center_m + x * eu + y * ev - bs).normalized();
      sum += pattern_amplitude(beam, dir.dot(eu), dir.dot(ev));
    }
  const double mean = sum / (kGrid * kGrid);
  const double wu = 2.0 * std::sin(width / 2.0);
  const double flat = 1.0 / (beam.array.spacing_wavelengths * wu);
  return std::min(1.0, mean / flat);
}

double fused_gain(std::span<const double> efficiencies) {
  if (efficiencies.empty()) throw BeamError("fused_gain needs at least one base station");
  double s = 0.0;
  for (double a : efficiencies) s += a;
  return s * s / static_cast<double>(efficiencies.size());
}

double fused_gain(std::span<const RegisteredBeam> beams, const SensingArea& area) {
  std::vector<double> eff;
  eff.reserve(beams.size());
  for (const auto& b : beams) eff.push_back(amplitude_efficiency(b.beam, b.bs_position_m, area));
  return fused_gain(eff);
}

}  // namespace isac
