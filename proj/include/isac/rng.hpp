#pragma once

/**
 * @file rng.hpp
 * @brief Reproducible per-trial random streams.
 *
 * Every random draw in a simulation comes from a stream keyed by
 * (master seed, trial index, purpose, substream). Streams are seeded through
 * std::seed_seq and std::mt19937_64, both of which have fully specified
 * algorithms, so a given key produces the same sequence on every platform.
 */

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace isac {

enum class StreamPurpose : std::uint32_t {
  payload = 1,
  noise = 2,
  geometry_jitter = 3,
};

std::string_view to_string(StreamPurpose purpose);

using RngStream = std::mt19937_64;

RngStream derive_rng_stream(std::uint64_t master_seed, std::uint64_t trial_index,
                            StreamPurpose purpose, std::uint32_t substream = 0);

/// Standard normal deviate (ziggurat; identical output for identical engine state).
inline double standard_normal(RngStream& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline std::complex<double> complex_normal(RngStream& rng, double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = standard_normal(rng);
  const double im = standard_normal(rng);
  return {s * re, s * im};
}

/// Uniform on [lo, hi) built from the raw 53 high bits of one engine output.
inline double uniform_real(RngStream& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace isac
