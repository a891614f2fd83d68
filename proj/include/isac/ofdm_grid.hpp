#pragma once

/**
 * @file ofdm_grid.hpp
 * @brief Transmitted ISAC frame: an N x M grid of QPSK payload symbols.
 */

#include "isac/rng.hpp"
#include "isac/scenario.hpp"

namespace isac {

struct TxFrame {
  SymbolGrid symbols;
  Numerology numerology;
};

/// Draws i.i.d. symbols uniformly from {(+-1 +- j)/sqrt(2)}, two bits per symbol.
TxFrame generate_frame(const Numerology& numerology, RngStream& payload_stream);

}  // namespace isac
