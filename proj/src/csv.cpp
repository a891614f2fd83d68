#include "isac/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace isac {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

void write_csv(std::ostream& out, const SweepResult& r) {
  std::string line = r.sweep_variable;
  for (const auto& c : r.metric_columns) line += "," + c;
  line += ",trials,seed,config_hash\n";
  out << line;
  const std::string provenance = fmt::format(",{},{},{:016x}\n", r.trials, r.seed, r.config_hash);
  for (std::size_t i = 0; i < r.sweep_values.size(); ++i) {
    line = format_number(r.sweep_values[i]);
    for (double v : r.metrics[i]) line += "," + format_number(v);
    out << line << provenance;
  }
}

std::string to_csv(const SweepResult& r) {
  std::ostringstream ss;
  write_csv(ss, r);
  return ss.str();
}

void write_csv_file(const std::filesystem::path& path, const SweepResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  write_csv(out, r);
}

void write_rdmap_csv(const std::filesystem::path& path, const RangeDopplerMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  const auto L = map.delay_bins();
  const auto K = map.doppler_bins();
  auto wrap = [](Eigen::Index b, Eigen::Index n, bool w) {
    return (w && 2 * b >= n) ? static_cast<double>(b - n) : static_cast<double>(b);
  };
  std::string line = "delay_s\\doppler_hz";
  for (Eigen::Index k = 0; k < K; ++k) line += "," + format_number(map.doppler_of(wrap(k, K, true)));
  out << line << '\n';
  for (Eigen::Index l = 0; l < L; ++l) {
    line = format_number(map.delay_of(wrap(l, L, map.signed_delay)));
    for (Eigen::Index k = 0; k < K; ++k) line += "," + format_number(map.magnitudes(l, k));
    out << line << '\n';
  }
}

}  // namespace isac
