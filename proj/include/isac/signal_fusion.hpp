#pragma once

/**
 * @file signal_fusion.hpp
 * @brief Signal-level cooperative active sensing: matched-filter search over
 *        a confidence region and velocity interval using the channel
 *        matrices of several links.
 *
 * A hypothesis is a horizontal position p and a speed v along a known
 * heading. Each link integrates coherently over its own grid; links are
 * combined by summing magnitudes.
 */

#include <span>
#include <vector>

#include "isac/data_fusion.hpp"
#include "isac/rd_estimation.hpp"

namespace isac {

struct FusionLink {
  const ChannelMatrix* channel = nullptr;
  Vec3 tx_position_m = Vec3::Zero();
  Vec3 rx_position_m = Vec3::Zero();
};

/// s(n, m) = exp(-j2pi n df tau(p)) exp(+j2pi m T f_D(p, v * heading)).
SymbolGrid steering_signature(const Numerology& numerology, const Vec3& tx_position_m,
                              const Vec3& rx_position_m, const Vec2& position_m, double velocity_mps,
                              const Vec3& heading = Vec3::UnitX());

/// sum over links of |sum_{n,m} G(n,m) conj(s(n,m))|.
double hypothesis_score(std::span<const FusionLink> links, const Vec2& position_m,
                        double velocity_mps, const Vec3& heading = Vec3::UnitX());

enum class ScoreEngine {
  direct,  ///< hypothesis_score for every cell
  taylor,  ///< batched evaluation, agrees with direct to ~1e-10 relative
};

struct RefineParams {
  int grid = 8;
  double shrink_cells = 1.5;
  int max_iterations = 6;
  double position_tol_m = 0.05;
  double velocity_tol_mps = 0.05;
  Vec3 heading = Vec3::UnitX();
  ScoreEngine engine = ScoreEngine::taylor;
};

struct RefineStep {
  ConfidenceRegion region;
  ConfidenceInterval interval;
  Vec2 position_m = Vec2::Zero();
  double velocity_mps = 0.0;
  double score = 0.0;
};

struct FusionResult {
  Vec2 position_m = Vec2::Zero();
  double velocity_mps = 0.0;
  double score = 0.0;
  int iterations = 0;
  std::vector<RefineStep> trace;
  Vec2 final_cell_m = Vec2::Zero();  ///< position cell pitch of the last search
  double final_velocity_cell_mps = 0.0;
};

/**
 * Alternating coarse-to-fine search.
 *
 * Each iteration grid-searches P x P position cells at the current velocity,
 * then P velocity cells at the winning position, and shrinks both to
 * shrink_cells cells around the winners, kept inside the initial region and
 * interval. The best hypothesis seen so far is kept, so the score along the
 * trace never drops. Stops once the cell pitch is within tolerance on every
 * axis or after max_iterations. Ties go to the smallest x, then y, then v.
 * Throws FusionError for an empty region or interval.
 */
FusionResult iterative_refine(std::span<const FusionLink> links, const ConfidenceRegion& region,
                              const ConfidenceInterval& interval, const RefineParams& params = {});

/// Scores of all cells on a grid for one fixed velocity, computed by the chosen engine.
std::vector<double> score_positions(std::span<const FusionLink> links, std::span<const Vec2> cells,
                                    double velocity_mps, const Vec3& heading, ScoreEngine engine);

/// Scores of several velocities at one position.
std::vector<double> score_velocities(std::span<const FusionLink> links, const Vec2& position_m,
                                     std::span<const double> velocities, const Vec3& heading,
                                     ScoreEngine engine);

}  // namespace isac
