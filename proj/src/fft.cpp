#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>
#include <map>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace isac::detail {

namespace {

struct FftwBuffer {
  fftw_complex* ptr;
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  FftwBuffer(FftwBuffer&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
};

/// In-place forward 2-D plans keyed by shape; executed on fresh aligned buffers.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int rows, int cols) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({rows, cols});
    if (it != plans_.end()) return it->second;
    FftwBuffer scratch(static_cast<std::size_t>(rows) * cols);
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, scratch.ptr, scratch.ptr, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(std::make_pair(rows, cols), plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

namespace {

/// Forward 2-D FFT of G zero-padded to rows x cols, in an aligned buffer.
FftwBuffer padded_forward(const SymbolGrid& G, int rows, int cols) {
  const Eigen::Index N = G.rows();
  const Eigen::Index M = G.cols();
  if (rows < N || cols < M) throw std::invalid_argument("padded DFT: padded size below input size");
  fftw_plan plan = cache().get(rows, cols);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  FftwBuffer buf(n);
  std::memset(buf.ptr, 0, n * sizeof(fftw_complex));
  for (Eigen::Index r = 0; r < N; ++r)
    std::memcpy(buf.ptr[static_cast<std::size_t>(r) * cols], G.row(r).data(), M * sizeof(fftw_complex));
  fftw_execute_dft(plan, buf.ptr, buf.ptr);
  return buf;
}

double norm2(const fftw_complex& z) { return z[0] * z[0] + z[1] * z[1]; }

}  // namespace

Eigen::MatrixXd padded_dft_magnitudes(const SymbolGrid& G, int rows, int cols) {
  const FftwBuffer buf = padded_forward(G, rows, cols);
  Eigen::MatrixXd out(rows, cols);
  for (int k = 0; k < cols; ++k)
    for (int l = 0; l < rows; ++l)
      out(l, k) = std::sqrt(norm2(buf.ptr[static_cast<std::size_t>((rows - l) % rows) * cols + k]));
  return out;
}

DftMaximum padded_dft_maximum(const SymbolGrid& G, int rows, int cols, bool with_median) {
  const FftwBuffer buf = padded_forward(G, rows, cols);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  // Row-major scan in output order l = 0, 1, ...; source row (rows - l) % rows.
  DftMaximum best;
  double best2 = -1.0;
  for (int l = 0; l < rows; ++l) {
    const fftw_complex* src = buf.ptr + static_cast<std::size_t>((rows - l) % rows) * cols;
    for (int k = 0; k < cols; ++k) {
      const double v = norm2(src[k]);
      if (v > best2) {
        best2 = v;
        best.row = l;
        best.col = k;
      }
    }
  }
  best.magnitude = std::sqrt(best2);
  best.median = std::numeric_limits<double>::quiet_NaN();
  if (with_median) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = norm2(buf.ptr[i]);
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    best.median = std::sqrt(*mid);
    if (n % 2 == 0) best.median = 0.5 * (best.median + std::sqrt(*std::max_element(v.begin(), mid)));
  }
  return best;
}

int next_fast_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace isac::detail
