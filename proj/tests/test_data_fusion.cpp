#include <doctest.h>

#include <algorithm>
#include <random>

#include "isac/data_fusion.hpp"
#include "support.hpp"

using namespace isac;

namespace {

Estimate est(double r, double v, double snr_db = 0.0, double score = 1.0) {
  Estimate e;
  e.range_m = r;
  e.velocity_mps = v;
  e.snr_db = snr_db;
  e.score = score;
  return e;
}

std::vector<RangeObservation> square_ranges(const Vec2& p, double half_side) {
  std::vector<RangeObservation> obs;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0}) {
      const Vec3 bs{sx * half_side, sy * half_side, 0.0};
      obs.push_back({bs, (horizontal(p) - bs).norm()});
    }
  return obs;
}

double sum_sq_residual(std::span<const RangeObservation> obs, const Vec2& p) {
  double s = 0.0;
  for (const auto& o : obs) {
    const double r = (horizontal(p) - o.bs_position_m).norm() - o.range_m;
    s += r * r;
  }
  return s;
}

}  // namespace

TEST_CASE("weighted average of a single estimate is that estimate") {
  const std::vector<Estimate> one{est(123.4, -5.6, 3.0, 7.0)};
  const Estimate out = weighted_average(one);
  CHECK(out.range_m == doctest::Approx(123.4));
  CHECK(out.velocity_mps == doctest::Approx(-5.6));
  CHECK(out.score == doctest::Approx(7.0));
  CHECK(out.snr_db == doctest::Approx(3.0));
}

TEST_CASE("weighted average examples") {
  const std::vector<Estimate> pair{est(499, 0), est(501, 0)};
  CHECK(weighted_average(pair).range_m == doctest::Approx(500.0));
  const std::vector<Estimate> lopsided{est(400, 10), est(600, 30)};
  const std::vector<double> w{1.0, 3.0};
  const Estimate out = weighted_average(lopsided, w);
  CHECK(out.range_m == doctest::Approx(550.0));
  CHECK(out.velocity_mps == doctest::Approx(25.0));
}

TEST_CASE("default weights are the linear SNRs") {
  const std::vector<Estimate> e{est(100, 0, 0.0), est(200, 0, 10.0 * std::log10(3.0))};
  CHECK(weighted_average(e).range_m == doctest::Approx(175.0));
}

TEST_CASE("weighted average is permutation invariant and idempotent") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0), uw(0.1, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Estimate> e;
    std::vector<double> w;
    for (int i = 0; i < 5; ++i) {
      e.push_back(est(500 + u(gen), u(gen)));
      w.push_back(uw(gen));
    }
    const Estimate a = weighted_average(e, w);
    std::vector<std::size_t> idx{4, 2, 0, 3, 1};
    std::vector<Estimate> ep;
    std::vector<double> wp;
    for (auto i : idx) {
      ep.push_back(e[i]);
      wp.push_back(w[i]);
    }
    const Estimate b = weighted_average(ep, wp);
    CHECK(a.range_m == doctest::Approx(b.range_m).epsilon(1e-14));
    CHECK(a.velocity_mps == doctest::Approx(b.velocity_mps).epsilon(1e-13));

    const std::vector<Estimate> same(4, e[0]);
    const Estimate c = weighted_average(same, std::vector<double>(w.begin(), w.begin() + 4));
    CHECK(c.range_m == doctest::Approx(e[0].range_m).epsilon(1e-15));
    CHECK(c.velocity_mps == doctest::Approx(e[0].velocity_mps).epsilon(1e-14));
  }
}

TEST_CASE("weighted average rejects bad input") {
  const std::vector<Estimate> two{est(1, 0), est(2, 0)};
  CHECK_THROWS_AS(weighted_average(std::span<const Estimate>{}), FusionError);
  CHECK_THROWS_AS(weighted_average(two, std::vector<double>{1.0}), FusionError);
  CHECK_THROWS_AS(weighted_average(two, std::vector<double>{1.0, -1.0}), FusionError);
  CHECK_THROWS_AS(weighted_average(two, std::vector<double>{0.0, 0.0}), FusionError);
}

TEST_CASE("multilateration of exact ranges recovers the point") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec2 p{u(gen), u(gen)};
    const auto obs = square_ranges(p, 50.0);
    const Multilateration m = multilaterate(obs);
    CHECK((m.position_m - p).norm() < 1e-6);
    CHECK(m.residual_sq < 1e-9);
  }
}

TEST_CASE("multilateration with sites above the target plane") {
  const Vec2 p{3.0, -7.0};
  std::vector<RangeObservation> obs;
  for (const Vec3& bs : {Vec3{100, 0, 25}, Vec3{0, 120, 30}, Vec3{-90, -10, 20}}) obs.push_back({bs, (horizontal(p) - bs).norm()});
  CHECK((multilaterate(obs).position_m - p).norm() < 1e-6);
}

TEST_CASE("ranges perturbed by one range bin move the fix by less than 5 m") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> noise(-1.6, 1.6), u(-20.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 p{u(gen), u(gen)};
    auto obs = square_ranges(p, 50.0);
    for (auto& o : obs) o.range_m += noise(gen);
    const Multilateration m = multilaterate(obs);
    CHECK((m.position_m - p).norm() < 5.0);

    // Brute-force least-squares oracle on a 2 cm grid around the truth.
    double best = std::numeric_limits<double>::infinity();
    Vec2 best_p = p;
    for (double dx = -5.0; dx <= 5.0; dx += 0.02)
      for (double dy = -5.0; dy <= 5.0; dy += 0.02) {
        const Vec2 q = p + Vec2{dx, dy};
        const double s = sum_sq_residual(obs, q);
        if (s < best) {
          best = s;
          best_p = q;
        }
      }
    CHECK(m.residual_sq <= best + 1e-9);
    CHECK((m.position_m - best_p).norm() < 0.05);
  }
}

TEST_CASE("multilateration needs three non-collinear sites") {
  std::vector<RangeObservation> two{{Vec3{0, 0, 0}, 10.0}, {Vec3{20, 0, 0}, 10.0}};
  CHECK_THROWS_AS(multilaterate(two), FusionError);
  std::vector<RangeObservation> line{{Vec3{0, 0, 0}, 10.0}, {Vec3{20, 0, 0}, 10.0}, {Vec3{40, 0, 0}, 30.0}};
  CHECK_THROWS_AS(multilaterate(line), FusionError);
}

TEST_CASE("confidence region and interval widths") {
  const double bin = kSpeedOfLight / (2.0 * 93.12e6);
  CHECK(build_confidence_region({0, 0}, bin, 2.0).half_widths_m.x() == doctest::Approx(3.22).epsilon(1e-3));
  CHECK(build_confidence_region({1, 2}, 1.0, 0.5).half_widths_m.y() == doctest::Approx(0.5));
  CHECK(build_confidence_interval(0.0, 1.56, 2.0).half_width_mps == doctest::Approx(3.12));
  CHECK(build_confidence_interval(0.3, 1.56, 2.0).contains(0.0));
  const ConfidenceRegion r = build_confidence_region({1, 2}, 1.0, 2.0);
  CHECK(r.contains({2.9, 0.1}));
  CHECK_FALSE(r.contains({3.1, 2.0}));
  CHECK(r.area() == doctest::Approx(16.0));
}
