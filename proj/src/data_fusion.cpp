#include "isac/data_fusion.hpp"

#include <cmath>

#include <fmt/format.h>

namespace isac {

Estimate weighted_average(std::span<const Estimate> estimates, std::span<const double> weights) {
  if (estimates.empty()) throw FusionError("weighted_average: no estimates");
  if (weights.size() != estimates.size())
    throw FusionError(fmt::format("weighted_average: {} estimates but {} weights", estimates.size(),
                                  weights.size()));
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw FusionError("weighted_average: weights must be finite and >= 0");
    total += w;
  }
  if (total == 0.0) throw FusionError("weighted_average: all weights are zero");

  Estimate out = estimates.front();
  out.range_m = 0.0;
  out.velocity_mps = 0.0;
  out.score = 0.0;
  double snr = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double w = weights[i] / total;
    out.range_m += w * estimates[i].range_m;
    out.velocity_mps += w * estimates[i].velocity_mps;
    out.score += w * estimates[i].score;
    snr += w * db_to_linear(estimates[i].snr_db);
  }
  out.snr_db = linear_to_db(snr);
  return out;
}

Estimate weighted_average(std::span<const Estimate> estimates) {
  std::vector<double> w;
  w.reserve(estimates.size());
  for (const auto& e : estimates) w.push_back(std::isinf(e.snr_db) ? 1.0 : db_to_linear(e.snr_db));
  return weighted_average(estimates, w);
}

Multilateration multilaterate(std::span<const RangeObservation> ranges, std::optional<Vec2> initial_guess) {
  if (ranges.size() < 3)
    throw FusionError(fmt::format("multilaterate: underdetermined, {} sites (need >= 3)", ranges.size()));

  Vec2 centroid = Vec2::Zero();
  for (const auto& r : ranges) centroid += r.bs_position_m.head<2>();
  centroid /= static_cast<double>(ranges.size());

  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& r : ranges) {
    const Vec2 d = r.bs_position_m.head<2>() - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  if (eig.eigenvalues()(0) <= 1e-12 * std::max(eig.eigenvalues()(1), 1e-300))
    throw FusionError("multilaterate: site positions are collinear");

  Multilateration out;
  Vec2 p = initial_guess.value_or(centroid);
  double last_step = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::Matrix2d JtJ = Eigen::Matrix2d::Zero();
    Vec2 Jtr = Vec2::Zero();
    for (const auto& r : ranges) {
      const Vec3 d = horizontal(p) - r.bs_position_m;
      const double dist = d.norm();
      if (dist == 0.0) continue;
      const Vec2 g = d.head<2>() / dist;
      JtJ += g * g.transpose();
      Jtr += g * (dist - r.range_m);
    }
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(JtJ);
    if (!lu.isInvertible()) throw FusionError("multilaterate: degenerate normal matrix");
    const Vec2 step = -lu.solve(Jtr);
    p += step;
    out.iterations = it + 1;
    last_step = step.norm();
    if (last_step < 1e-6) break;
  }
  if (!p.allFinite() || last_step > 1e-3)
    throw FusionError(fmt::format("multilaterate: no convergence after 50 iterations (last step {:.3g} m)",
                                  last_step));
  out.position_m = p;
  for (const auto& r : ranges) {
    const double e = (horizontal(p) - r.bs_position_m).norm() - r.range_m;
    out.residual_sq += e * e;
  }
  return out;
}

ConfidenceRegion build_confidence_region(const Vec2& position_m, double range_rmse_m, double kappa) {
  if (!(range_rmse_m > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("build_confidence_region: rmse and kappa must be > 0");
  return {position_m, Vec2::Constant(kappa * range_rmse_m)};
}

ConfidenceInterval build_confidence_interval(double velocity_mps, double velocity_rmse_mps, double kappa) {
  if (!(velocity_rmse_mps > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("build_confidence_interval: rmse and kappa must be > 0");
  return {velocity_mps, kappa * velocity_rmse_mps};
}

}  // namespace isac
