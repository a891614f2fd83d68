#pragma once

/**
 * @file echo_channel.hpp
 * @brief Link geometry and symbol-domain echo synthesis.
 *
 * The channel acts multiplicatively on the OFDM symbol grid: the cyclic
 * prefix is assumed to absorb every modeled delay, so a target at delay tau
 * and Doppler f contributes exp(-j2pi n df tau) exp(+j2pi m T f) to entry (n, m).
 * Carrier offsets are modeled as a pure inter-symbol phase progression.
 */

#include <span>
#include <stdexcept>

#include "isac/ofdm_grid.hpp"
#include "isac/rng.hpp"
#include "isac/scenario.hpp"

namespace isac {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AmbiguityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// tx -> target -> rx propagation delay.
double bistatic_delay(const Vec3& tx_pos, const Vec3& target_pos, const Vec3& rx_pos);

/**
 * @brief Bistatic Doppler shift, positive for a closing target.
 *
 * (fc/c) * (v . u_tx + v . u_rx) with u the unit vectors from the target
 * toward each site. Throws GeometryError if the target sits on a site.
 */
double bistatic_doppler(const Vec3& target_pos, const Vec3& target_vel, const Vec3& tx_pos,
                        const Vec3& rx_pos, double carrier_freq_hz);

struct RxSymbolMatrix {
  SymbolGrid symbols;
  LinkSpec link;
  double noise_variance = 0.0;
};

/// Per-element noise variance implied by the link SNR and the scene's target power.
double noise_variance_for(const LinkSpec& link, std::span<const Target> targets);

/**
 * @brief Noise-free channel response H(n, m) of one link (before the payload).
 *
 * Uses link.sync_error as the realized offsets. Throws AmbiguityError when a
 * delay (including timing offset) or Doppler (including CFO) leaves the
 * unambiguous window of the numerology.
 */
SymbolGrid link_response(const Numerology& numerology, const LinkSpec& link,
                         std::span<const BsSite> sites, std::span<const Target> targets);

/// rx = tx .* H + w with w ~ CN(0, sigma^2) drawn from noise_stream.
RxSymbolMatrix synthesize_echo(const TxFrame& tx_frame, const LinkSpec& link,
                               std::span<const BsSite> sites, std::span<const Target> targets,
                               RngStream& noise_stream);

/// Unit-variance complex Gaussian grid, the same draws synthesize_echo would make.
SymbolGrid unit_noise(int rows, int cols, RngStream& noise_stream);

/// rx = tx .* H + sigma * unit_noise; the building block behind synthesize_echo.
RxSymbolMatrix compose_echo(const TxFrame& tx_frame, const SymbolGrid& response,
                            const SymbolGrid* unit_noise_grid, const LinkSpec& link,
                            double noise_variance);

/// Copy of the link with its per-frame offset residual drawn from the jitter stream.
LinkSpec realize_sync(const LinkSpec& link, RngStream& jitter_stream);

}  // namespace isac
