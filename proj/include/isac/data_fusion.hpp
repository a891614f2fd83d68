#pragma once

/**
 * @file data_fusion.hpp
 * @brief Fusion of per-BS range/velocity estimates into a position fix and
 *        the search region handed to signal-level refinement.
 *
 * Fusion happens in the horizontal plane; targets sit at height 0 while
 * sites may have any height.
 */

#include <optional>
#include <span>
#include <stdexcept>

#include "isac/rd_estimation.hpp"

namespace isac {

class FusionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfidenceRegion {
  Vec2 center_m = Vec2::Zero();
  Vec2 half_widths_m = Vec2::Ones();

  bool contains(const Vec2& p) const {
    return std::abs(p.x() - center_m.x()) <= half_widths_m.x() &&
           std::abs(p.y() - center_m.y()) <= half_widths_m.y();
  }
  double area() const { return 4.0 * half_widths_m.x() * half_widths_m.y(); }
};

struct ConfidenceInterval {
  double center_mps = 0.0;
  double half_width_mps = 1.0;

  bool contains(double v) const { return std::abs(v - center_mps) <= half_width_mps; }
};

/// Convex combination of ranges, velocities and scores. Throws FusionError on
/// empty input, size mismatch, negative or all-zero weights.
Estimate weighted_average(std::span<const Estimate> estimates, std::span<const double> weights);

/// Same with weights equal to each estimate's linear SNR.
Estimate weighted_average(std::span<const Estimate> estimates);

struct RangeObservation {
  Vec3 bs_position_m;
  double range_m = 0.0;
};

struct Multilateration {
  Vec2 position_m = Vec2::Zero();
  int iterations = 0;
  double residual_sq = 0.0;  ///< sum of squared range residuals, m^2
};

/**
 * Gauss-Newton fit of a horizontal position to per-site ranges.
 *
 * Starts from the centroid of the sites unless an initial guess is given and
 * stops once a step is shorter than 1e-6 m or after 50 iterations. Throws
 * FusionError for fewer than 3 sites, collinear sites, or a fit that is
 * still moving after the iteration cap.
 */
Multilateration multilaterate(std::span<const RangeObservation> ranges,
                              std::optional<Vec2> initial_guess = std::nullopt);

/// Square of half-width kappa * range_rmse_m around the position.
ConfidenceRegion build_confidence_region(const Vec2& position_m, double range_rmse_m, double kappa);

ConfidenceInterval build_confidence_interval(double velocity_mps, double velocity_rmse_mps,
                                             double kappa);

}  // namespace isac
