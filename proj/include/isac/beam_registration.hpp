#pragma once

/**
 * @file beam_registration.hpp
 * @brief Space registration with adjustable-beamwidth beams on a uniform
 *        planar array, and the fused-echo power gain of several BSs that
 *        illuminate one sensing unit.
 *
 * Directions are given by azimuth/elevation in the array frame, with
 * direction cosines u = cos(el) sin(az) along the array rows and v = sin(el)
 * along the columns. Element (p, q) sits at (p d, q d) wavelengths.
 */

#include <span>
#include <stdexcept>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

class BeamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArrayGeometry {
  int rows = 1;
  int cols = 1;
  double spacing_wavelengths = 0.5;

  static ArrayGeometry of(const BsSite& site) {
    return {site.array_rows, site.array_cols, site.element_spacing_wavelengths};
  }
  int size() const { return rows * cols; }
};

struct BeamWeights {
  Eigen::VectorXcd weights;  ///< element p * cols + q, unit norm
  ArrayGeometry array;
};

struct PatternMetrics {
  double realized_width_rad = 0.0;        ///< half-power width of the row-axis cut
  double in_sector_mean_amplitude = 0.0;  ///< mean over the requested sector of that cut
  double out_of_sector_peak_amplitude = 0.0;
};

struct SensingArea {
  Vec3 center_m = Vec3::Zero();
  double side_m = 1.0;
};

/// Half-power beamwidth 0.886 / (n d) of an n-element uniform line, radians.
double natural_hpbw(int elements, double spacing_wavelengths);

/// exp(j2pi d (p u + q v)) per element, unit norm.
Eigen::VectorXcd steering_vector(const ArrayGeometry& array, double azimuth, double elevation);

/// Array factor amplitude |sum conj(w_i) exp(j2pi d (p u + q v))| at direction cosines (u, v).
double pattern_amplitude(const BeamWeights& beam, double u, double v);

/// Row-axis cut (v = 0) of the pattern at the given angles from broadside.
std::vector<double> pattern_cut(const BeamWeights& beam, std::span<const double> angles_rad);

/// 2 atan(side / (2 distance)); throws BeamError if the BS is inside the area.
double required_width(const SensingArea& area, const Vec3& bs_position_m);

/// Conjugate phase steering with uniform amplitude.
BeamWeights synth_conventional(const ArrayGeometry& array, double azimuth, double elevation);

/**
 * Least-squares beam of the requested width.
 *
 * Each array axis gets a 1-D synthesis: the forward half-space is sampled
 * every grid_fraction natural HPBWs, the mask is 1 within desired_width / 2
 * of broadside and 0 beyond desired_width / 2 + HPBW (the band in between is
 * left free), and the squared pattern error is minimized. The planar weights
 * are the outer product of the two axis solutions, steered to the look
 * direction and normalized. An axis whose natural HPBW already covers the
 * request keeps uniform weights, so requests no wider than the natural HPBW
 * return the conventional beam. Throws BeamError if fewer than 8 samples fall
 * in the sector.
 */
std::pair<BeamWeights, PatternMetrics> synth_baba(const ArrayGeometry& array, double azimuth,
                                                  double elevation, double desired_width_rad,
                                                  double grid_fraction = 0.125);

/// Width, in-sector mean and out-of-sector peak of the row-axis cut about broadside.
PatternMetrics measure_pattern(const BeamWeights& beam, double sector_width_rad);

/**
 * Fraction of matched-illumination amplitude a beam delivers to the area.
 *
 * The array faces the area center. The mean pattern amplitude over a 16 x 16
 * grid of points on the area is divided by the amplitude of an ideal flat beam
 * of exactly the required width carrying the same radiated power,
 * 1 / (d sqrt(W_u W_v)) in direction-cosine space, and capped at 1.
 */
double amplitude_efficiency(const BeamWeights& beam, const Vec3& bs_position_m, const SensingArea& area);

/// (sum a_i)^2 / n; throws BeamError on empty input.
double fused_gain(std::span<const double> efficiencies);

struct RegisteredBeam {
  Vec3 bs_position_m = Vec3::Zero();
  BeamWeights beam;
};

double fused_gain(std::span<const RegisteredBeam> beams, const SensingArea& area);

}  // namespace isac
