#pragma once

/**
 * @file common.hpp
 * @brief Shared numeric types and physical constants.
 */

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace isac {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// N x M symbol grid: rows are subcarriers, columns are OFDM symbols.
using SymbolGrid = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline Vec3 horizontal(const Vec2& p) { return {p.x(), p.y(), 0.0}; }

}  // namespace isac
