#pragma once

#include "isac/common.hpp"

namespace isac::detail {

/**
 * Magnitudes of the inverse-n / forward-m DFT of G zero-padded to rows x cols:
 * out(l, k) = |sum G(n, m) exp(+j2pi n l / rows) exp(-j2pi m k / cols)|.
 *
 * Computed as a forward 2-D FFT read back at row (rows - l) % rows. Plans use
 * FFTW_ESTIMATE so results are identical from run to run.
 */
Eigen::MatrixXd padded_dft_magnitudes(const SymbolGrid& G, int rows, int cols);

struct DftMaximum {
  int row = 0;  ///< l in the inverse-n convention of padded_dft_magnitudes
  int col = 0;
  double magnitude = 0.0;
  double median = 0.0;  ///< median magnitude, NaN unless requested
};

/// Largest entry of padded_dft_magnitudes (first in row-major order on ties)
/// without materializing the map.
DftMaximum padded_dft_maximum(const SymbolGrid& G, int rows, int cols, bool with_median);

/// Smallest integer >= n with no prime factor above 7.
int next_fast_size(int n);

}  // namespace isac::detail
