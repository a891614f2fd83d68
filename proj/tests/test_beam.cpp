#include <doctest.h>

#include <algorithm>
#include <random>

#include "isac/beam_registration.hpp"
#include "isac/experiments.hpp"
#include "support.hpp"

using namespace isac;
namespace ts = testing_support;

namespace {

constexpr double kDeg = kPi / 180.0;
const ArrayGeometry kArray{32, 32, 0.5};

/// Half-power width of a row-axis cut found by scanning outward from broadside at 1e-4 rad.
double scanned_hpbw(const BeamWeights& b) {
  const double peak = pattern_amplitude(b, 0.0, 0.0);
  const double half = peak / std::sqrt(2.0);
  double right = 0.0, left = 0.0;
  while (pattern_amplitude(b, std::sin(right), 0.0) >= half) right += 1e-4;
  while (pattern_amplitude(b, std::sin(left), 0.0) >= half) left -= 1e-4;
  return right - left;
}

std::vector<RegisteredBeam> fig5_beams(double side, bool baba) {
  std::vector<RegisteredBeam> out;
  const SensingArea area{Vec3::Zero(), side};
  for (const Vec3& bs : {Vec3{50, 0, 0}, Vec3{0, 50, 0}, Vec3{-50, 0, 0}, Vec3{0, -50, 0}}) {
    const double w = required_width(area, bs);
    out.push_back({bs, baba ? synth_baba(kArray, 0.0, 0.0, w).first : synth_conventional(kArray, 0.0, 0.0)});
  }
  return out;
}

}  // namespace

TEST_CASE("broadside steering has equal phases and full array gain") {
  const BeamWeights b = synth_conventional(kArray, 0.0, 0.0);
  REQUIRE(b.weights.size() == 1024);
  for (Eigen::Index i = 1; i < b.weights.size(); ++i) CHECK(std::abs(b.weights(i) - b.weights(0)) < 1e-15);
  CHECK(b.weights.norm() == doctest::Approx(1.0).epsilon(1e-14));
  // Unit-norm weights: the amplitude at the look direction is sqrt(rows * cols).
  CHECK(pattern_amplitude(b, 0.0, 0.0) * pattern_amplitude(b, 0.0, 0.0) == doctest::Approx(1024.0).epsilon(1e-12));
}

TEST_CASE("natural half-power beamwidth of a 32 element row") {
  CHECK(natural_hpbw(32, 0.5) / kDeg == doctest::Approx(3.17).epsilon(2e-3));
  const double scanned = scanned_hpbw(synth_conventional(kArray, 0.0, 0.0));
  CHECK(scanned == doctest::Approx(natural_hpbw(32, 0.5)).epsilon(0.01));
  CHECK(measure_pattern(synth_conventional(kArray, 0.0, 0.0), 3.0 * natural_hpbw(32, 0.5)).realized_width_rad ==
        doctest::Approx(scanned).epsilon(0.01));
}

TEST_CASE("steered beam peaks at its look direction") {
  for (const auto& [az, el] : {std::pair{10.0, 0.0}, std::pair{-25.0, 5.0}, std::pair{40.0, -12.0}}) {
    const double a = az * kDeg, e = el * kDeg;
    const BeamWeights b = synth_conventional(kArray, a, e);
    const double u0 = std::cos(e) * std::sin(a), v0 = std::sin(e);
    const double peak = pattern_amplitude(b, u0, v0);
    CHECK(peak == doctest::Approx(32.0).epsilon(1e-10));
    for (double du : {-0.01, 0.01})
      for (double dv : {-0.01, 0.0, 0.01}) CHECK(pattern_amplitude(b, u0 + du, v0 + dv) < peak);
  }
}

TEST_CASE("required width examples") {
  CHECK(required_width({Vec3::Zero(), 3.0}, {50, 0, 0}) / kDeg == doctest::Approx(3.44).epsilon(2e-3));
  CHECK(required_width({Vec3::Zero(), 10.0}, {50, 0, 0}) / kDeg == doctest::Approx(11.42).epsilon(2e-3));
  CHECK(required_width({Vec3::Zero(), 3.0}, {0, -50, 0}) == doctest::Approx(2.0 * std::atan(0.03)));
  CHECK(required_width({Vec3::Zero(), 1e-9}, {50, 0, 0}) < 1e-10);
  CHECK_THROWS_AS(required_width({Vec3::Zero(), 10.0}, {2, 1, 0}), BeamError);
}

TEST_CASE("least-squares beam at the natural width matches it") {
  const double hpbw = natural_hpbw(32, 0.5);
  const auto [b, m] = synth_baba(kArray, 0.0, 0.0, hpbw);
  CHECK(scanned_hpbw(b) == doctest::Approx(hpbw).epsilon(0.15));
  CHECK(m.realized_width_rad == doctest::Approx(hpbw).epsilon(0.15));
}

TEST_CASE("least-squares beam at three natural widths is flat and close to the request") {
  const double want = 3.0 * natural_hpbw(32, 0.5);
  const auto [b, m] = synth_baba(kArray, 0.0, 0.0, want);
  CHECK(scanned_hpbw(b) == doctest::Approx(want).epsilon(0.15));
  CHECK(m.realized_width_rad == doctest::Approx(want).epsilon(0.15));
  std::vector<double> angles;
  for (int i = -50; i <= 50; ++i) angles.push_back(0.5 * want * i / 50.0);
  const auto cut = pattern_cut(b, angles);
  const auto [lo, hi] = std::minmax_element(cut.begin(), cut.end());
  CHECK(20.0 * std::log10(*hi / *lo) < 3.0);
  CHECK(b.weights.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("requests at or below the natural width fall back to conventional steering") {
  const BeamWeights conv = synth_conventional(kArray, 0.2, -0.1);
  for (double w : {0.0, 0.5 * natural_hpbw(32, 0.5)}) {
    const BeamWeights b = synth_baba(kArray, 0.2, -0.1, w).first;
    CHECK((b.weights - conv.weights).norm() < 1e-12);
  }
}

TEST_CASE("least-squares beam peaks near its look direction") {
  const double a = 15.0 * kDeg;
  const BeamWeights b = synth_baba(kArray, a, 0.0, 8.0 * kDeg).first;
  CHECK(b.weights.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const double at_look = pattern_amplitude(b, std::sin(a), 0.0);
  CHECK(at_look > 0.5 * pattern_amplitude(b, std::sin(a + 0.5 * kDeg), 0.0));
  CHECK(at_look > 2.0 * pattern_amplitude(b, std::sin(a + 12.0 * kDeg), 0.0));
  CHECK(at_look > 2.0 * pattern_amplitude(b, std::sin(a - 12.0 * kDeg), 0.0));
}

TEST_CASE("conventional beam covers a wide sector no better than the least-squares beam") {
  const ArrayGeometry line{32, 1, 0.5};
  for (double k : {2.0, 3.0, 4.0}) {
    const double sector = k * natural_hpbw(32, 0.5);
    CAPTURE(k);
    // Line array: the row cut is the whole pattern.
    const double conv_line = measure_pattern(synth_conventional(line, 0.0, 0.0), sector).in_sector_mean_amplitude;
    CHECK(conv_line <= synth_baba(line, 0.0, 0.0, sector).second.in_sector_mean_amplitude);

    // Planar array: mean amplitude over the square sector in both angles.
    const BeamWeights conv = synth_conventional(kArray, 0.0, 0.0);
    const BeamWeights baba = synth_baba(kArray, 0.0, 0.0, sector).first;
    double sum_conv = 0.0, sum_baba = 0.0;
    constexpr int kSamples = 41;
    for (int i = 0; i < kSamples; ++i)
      for (int j = 0; j < kSamples; ++j) {
        const double u = std::sin(sector * (i / (kSamples - 1.0) - 0.5));
        const double v = std::sin(sector * (j / (kSamples - 1.0) - 0.5));
        sum_conv += pattern_amplitude(conv, u, v);
        sum_baba += pattern_amplitude(baba, u, v);
      }
    CHECK(sum_conv <= sum_baba);
  }
}

TEST_CASE("fused gain of efficiencies") {
  CHECK(fused_gain(std::vector<double>{1, 1, 1, 1}) == doctest::Approx(4.0));
  CHECK(fused_gain(std::vector<double>{0.5, 0.5, 0.5, 0.5}) == doctest::Approx(1.0));
  CHECK(fused_gain(std::vector<double>{1.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(fused_gain(std::span<const double>{}), BeamError);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> e{u(gen), u(gen), u(gen), u(gen)};
    const double g = fused_gain(e);
    CHECK(g < 4.0);
    std::shuffle(e.begin(), e.end(), gen);
    CHECK(fused_gain(e) == doctest::Approx(g).epsilon(1e-14));
  }
}

TEST_CASE("fused gain over beams ignores BS order and is N only for ideal beams") {
  const SensingArea area{Vec3::Zero(), 6.0};
  auto beams = fig5_beams(6.0, true);
  const double g = fused_gain(beams, area);
  std::reverse(beams.begin(), beams.end());
  CHECK(fused_gain(beams, area) == doctest::Approx(g).epsilon(1e-12));
  CHECK(g < 4.0);
  double eff_sum = 0.0;
  for (const auto& b : beams) eff_sum += amplitude_efficiency(b.beam, b.bs_position_m, area);
  CHECK(g == doctest::Approx(eff_sum * eff_sum / 4.0).epsilon(1e-12));
}

TEST_CASE("amplitude efficiency lies in (0, 1]") {
  for (double side : {1.0, 3.0, 10.0}) {
    const SensingArea area{Vec3::Zero(), side};
    for (bool baba : {false, true})
      for (const auto& b : fig5_beams(side, baba)) {
        const double e = amplitude_efficiency(b.beam, b.bs_position_m, area);
        CHECK(e > 0.0);
        CHECK(e <= 1.0);
      }
  }
}

TEST_CASE("least-squares fused gain never decreases as the sensing unit grows over the fig5 sweep") {
  const ScenarioConfig c = load_scenario_file(ts::preset("fig5.toml"));
  const SweepResult r = run_scenario(c);
  for (std::size_t i = 1; i < r.sweep_values.size(); ++i) {
    CAPTURE(r.sweep_values[i]);
    CHECK(r.at(i, "gain_baba") >= r.at(i - 1, "gain_baba"));
  }
}
