// isac-coop-sim: runs a scenario file or one of the figure presets and writes a CSV.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "isac/csv.hpp"
#include "isac/experiments.hpp"

namespace fs = std::filesystem;

namespace {

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + suffix + ".csv");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative ISAC sensing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  int workers = 1;
  bool dump_rdmap = false;
  bool dump_pattern = false;

  for (const char* name : {"run", "fig5", "fig7", "fig6"}) {
    CLI::App* sub = app.add_subcommand(name, std::string(name) == "run" ? "run a scenario file"
                                                                        : fmt::format("reproduce the {} sweep", name));
    sub->add_option("--config", config_path, "scenario file (figN defaults to presets/figN.toml)");
    sub->add_option("--trials", trials, "Monte Carlo trials per sweep point")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_path, "CSV output path (stdout if omitted)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--dump-rdmap", dump_rdmap, "write <out>_rdmap.csv for trial 0 at the first sweep value");
    sub->add_flag("--dump-pattern", dump_pattern, "write <out>_pattern.csv with beam cuts");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  if (config_path.empty()) {
    if (command == "run") {
      std::cerr << "run: --config is required\n";
      return 2;
    }
    config_path = fmt::format("{}/{}.toml", ISAC_PRESET_DIR, command);
  }
  if ((dump_rdmap || dump_pattern) && out_path.empty()) {
    std::cerr << "--dump-rdmap/--dump-pattern need --out\n";
    return 2;
  }

  try {
    const isac::ScenarioConfig config = isac::load_scenario_file(config_path);
    isac::RunOptions options;
    options.trials = trials;
    options.seed = seed;
    options.workers = workers;
    if (dump_rdmap) options.dump_rdmap = sibling(out_path, "_rdmap");
    if (dump_pattern) options.dump_pattern = sibling(out_path, "_pattern");

    isac::SweepResult result;
    if (command == "fig5") result = isac::exp_fig5(config, options);
    else if (command == "fig7") result = isac::exp_fig7(config, options);
    else if (command == "fig6") result = isac::exp_fig6(config, options);
    else result = isac::run_scenario(config, options);

    if (out_path.empty()) isac::write_csv(std::cout, result);
    else isac::write_csv_file(out_path, result);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
