#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "isac/csv.hpp"
#include "isac/experiments.hpp"
#include "support.hpp"

using namespace isac;
namespace ts = testing_support;

namespace {

/// Four monostatic BSs around a moving target on a small numerology.
ScenarioConfig small_cooperative(double snr_db, int trials) {
  ScenarioConfig c = ts::ring_scene(ts::numerology(24e9, 120e3, 64, 16), {20, 110, 200, 290}, 300.0,
                                    {3.0, -2.0, 0.0}, {12.0, 5.0, 0.0}, snr_db);
  c.trials = trials;
  c.master_seed = 99;
  c.experiment.pipeline = Pipeline::cooperative_active;
  c.experiment.refine_max_iterations = 8;
  c.experiment.refine_position_tol_m = 0.01;
  c.experiment.refine_velocity_tol_mps = 0.01;
  validate_scenario(c);
  return c;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("CSV has a header, one row per sweep value, provenance and LF endings") {
  const ScenarioConfig c = load_scenario_file(ts::preset("fig5.toml"));
  const SweepResult r = run_scenario(c);
  const std::string csv = to_csv(r);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.back() == '\n');
  const auto lines = lines_of(csv);
  REQUIRE(lines.size() == r.sweep_values.size() + 1);
  CHECK(lines[0].rfind("side_m,gain_perfect,gain_baba,gain_conventional", 0) == 0);
  CHECK(lines[0].ends_with("trials,seed,config_hash"));
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(scenario_hash(c)));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(lines[i].ends_with(std::string(",1,1,") + hash));
    CHECK(std::count(lines[i].begin(), lines[i].end(), ',') == std::count(lines[0].begin(), lines[0].end(), ','));
  }
}

TEST_CASE("number formatting round-trips and uses a decimal point") {
  for (double v : {0.1, 1.0 / 3.0, 4.0, -2.5e-7, 123456.789}) {
    const std::string s = format_number(v);
    CHECK(s.find(',') == std::string::npos);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_number(4.0) == "4");
}

TEST_CASE("perfect registration column is exactly 4") {
  const SweepResult r = exp_fig5(load_scenario_file(ts::preset("fig5.toml")));
  REQUIRE(r.sweep_values.size() == 19);
  for (std::size_t i = 0; i < r.sweep_values.size(); ++i) CHECK(r.at(i, "gain_perfect") == 4.0);
}

TEST_CASE("noise-free fig7 geometry, one trial: range error below 0.1 m") {
  ScenarioConfig c = load_scenario_file(ts::preset("fig7.toml"));
  c.experiment.sweep = SweepSpec{};
  for (auto& l : c.links) l.snr_db = std::numeric_limits<double>::infinity();
  RunOptions o;
  o.trials = 1;
  const SweepResult r = run_scenario(c, o);
  REQUIRE(r.sweep_values.size() == 1);
  CHECK(r.sweep_variable == "point");
  for (const char* col : {"rmse_range_single_m", "rmse_range_data_m", "rmse_range_signal_m"}) {
    CAPTURE(col);
    CHECK(r.at(0, col) < 0.1);
  }
  CHECK(r.at(0, "region_coverage") == 1.0);
  CHECK(r.at(0, "interval_coverage") == 1.0);
}

TEST_CASE("RMSE standard errors are reported alongside the RMSEs") {
  const SweepResult r = run_scenario(small_cooperative(0.0, 50));
  for (const char* col : {"rmse_range_single_se_m", "rmse_range_data_se_m", "rmse_range_signal_se_m",
                          "rmse_velocity_single_se_mps", "rmse_velocity_data_se_mps", "rmse_velocity_signal_se_mps"}) {
    CAPTURE(col);
    CHECK(r.at(0, col) > 0.0);
  }
  CHECK(r.at(0, "rmse_range_single_se_m") < r.at(0, "rmse_range_single_m"));
}

TEST_CASE("confidence region and interval cover the truth in at least 95% of 500 trials at 0 dB") {
  const SweepResult r = run_scenario(small_cooperative(0.0, 500));
  CHECK(r.at(0, "region_coverage") >= 0.95);
  CHECK(r.at(0, "interval_coverage") >= 0.95);
  CHECK(r.at(0, "rmse_range_data_m") <= r.at(0, "rmse_range_single_m"));
}

TEST_CASE("results do not depend on the worker count") {
  const ScenarioConfig c = small_cooperative(-5.0, 12);
  RunOptions one, three;
  three.workers = 3;
  CHECK(to_csv(run_scenario(c, one)) == to_csv(run_scenario(c, three)));

  ScenarioConfig p = load_scenario_file(ts::preset("fig6.toml"));
  p.experiment.sweep.start = -10.0;
  p.experiment.sweep.stop = 10.0;
  p.experiment.sweep.step = 10.0;
  RunOptions small;
  small.trials = 6;
  RunOptions small2 = small;
  small2.workers = 2;
  CHECK(to_csv(run_scenario(p, small)) == to_csv(run_scenario(p, small2)));
}

TEST_CASE("overrides change the provenance columns") {
  const ScenarioConfig c = small_cooperative(0.0, 4);
  RunOptions o;
  o.trials = 3;
  o.seed = 1234;
  const SweepResult r = run_scenario(c, o);
  CHECK(r.trials == 3);
  CHECK(r.seed == 1234);
  CHECK(r.config_hash == scenario_hash(effective_config(c, o)));
  CHECK(r.config_hash != scenario_hash(c));
}

TEST_CASE("experiment entry points check the pipeline and sweep") {
  const ScenarioConfig f5 = load_scenario_file(ts::preset("fig5.toml"));
  CHECK_THROWS_AS(exp_fig7(f5), ScenarioError);
  CHECK_THROWS_AS(exp_fig6(f5), ScenarioError);
  ScenarioConfig c = small_cooperative(0.0, 2);
  CHECK_THROWS_AS(exp_fig7(c), ScenarioError);
  c.experiment.sweep = {"snr_db", 0.0, 4.0, 2.0};
  CHECK_NOTHROW(exp_fig7(c));
}
