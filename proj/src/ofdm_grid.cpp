#include "isac/ofdm_grid.hpp"

#include <array>
#include <numbers>

namespace isac {

TxFrame generate_frame(const Numerology& numerology, RngStream& payload_stream) {
  constexpr double a = std::numbers::sqrt2 / 2.0;
  static const std::array<cplx, 4> constellation{cplx{a, a}, cplx{-a, a}, cplx{-a, -a},
                                                 cplx{a, -a}};

  TxFrame frame{SymbolGrid(numerology.num_subcarriers, numerology.num_symbols), numerology};
  cplx* out = frame.symbols.data();
  const Eigen::Index total = frame.symbols.size();

  // 32 symbols per 64-bit draw.
  Eigen::Index i = 0;
  while (i < total) {
    std::uint64_t bits = payload_stream();
    for (int k = 0; k < 32 && i < total; ++k, ++i) {
      out[i] = constellation[bits & 3u];
      bits >>= 2;
    }
  }
  return frame;
}

}  // namespace isac
