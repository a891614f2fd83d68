#include "isac/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "isac/echo_channel.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace isac {

std::string_view to_string(SiteRole role) {
  switch (role) {
    case SiteRole::tx_rx: return "tx_rx";
    case SiteRole::tx_only: return "tx_only";
    case SiteRole::rx_only: return "rx_only";
  }
  return "tx_rx";
}

std::string_view to_string(Pipeline pipeline) {
  switch (pipeline) {
    case Pipeline::cooperative_active: return "cooperative_active";
    case Pipeline::active_passive: return "active_passive";
    case Pipeline::beam_registration: return "beam_registration";
  }
  return "cooperative_active";
}

Vec3 Target::heading() const {
  const double s = velocity_mps.norm();
  if (s == 0.0) return Vec3::UnitX();
  return velocity_mps / s;
}

std::vector<double> SweepSpec::values() const {
  if (variable == "none") return {start};
  std::vector<double> out;
  const double tol = std::abs(step) * 1e-6;
  for (int i = 0;; ++i) {
    const double v = start + i * step;
    if (v > stop + tol) break;
    out.push_back(v);
  }
  return out;
}

const BsSite& ScenarioConfig::site(int id) const {
  for (const auto& s : sites)
    if (s.id == id) return s;
  throw ScenarioError(fmt::format("site id {} does not exist", id));
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ScenarioError(msg); }

/// Reads keys from one table and rejects anything it did not consume.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string section)
      : table_(table), section_(std::move(section)) {}

  std::string key_name(std::string_view key) const { return fmt::format("{}.{}", section_, key); }

  bool has(std::string_view key) const { return table_.contains(key); }

  double real(std::string_view key, std::optional<double> fallback = std::nullopt) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) {
      if (fallback) return *fallback;
      fail(fmt::format("{}: required key missing", key_name(key)));
    }
    if (auto v = node->value<double>()) return *v;
    fail(fmt::format("{}: expected a number", key_name(key)));
  }

  std::int64_t integer(std::string_view key, std::optional<std::int64_t> fallback = std::nullopt) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) {
      if (fallback) return *fallback;
      fail(fmt::format("{}: required key missing", key_name(key)));
    }
    if (auto v = node->value_exact<std::int64_t>()) return *v;
    fail(fmt::format("{}: expected an integer", key_name(key)));
  }

  std::string text(std::string_view key, std::optional<std::string> fallback = std::nullopt) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) {
      if (fallback) return *fallback;
      fail(fmt::format("{}: required key missing", key_name(key)));
    }
    if (auto v = node->value<std::string>()) return *v;
    fail(fmt::format("{}: expected a string", key_name(key)));
  }

  std::vector<double> reals(std::string_view key, std::size_t count,
                            std::optional<std::vector<double>> fallback = std::nullopt) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) {
      if (fallback) return *fallback;
      fail(fmt::format("{}: required key missing", key_name(key)));
    }
    const toml::array* arr = node->as_array();
    if (!arr || arr->size() != count)
      fail(fmt::format("{}: expected an array of {} numbers", key_name(key), count));
    std::vector<double> out;
    for (const auto& el : *arr) {
      auto v = el.value<double>();
      if (!v) fail(fmt::format("{}: expected an array of {} numbers", key_name(key), count));
      out.push_back(*v);
    }
    return out;
  }

  Vec3 vec3(std::string_view key, std::optional<Vec3> fallback = std::nullopt) {
    std::optional<std::vector<double>> fb;
    if (fallback) fb = std::vector<double>{fallback->x(), fallback->y(), fallback->z()};
    const auto v = reals(key, 3, fb);
    return {v[0], v[1], v[2]};
  }

  void finish() const {
    for (const auto& [k, v] : table_) {
      if (!seen_.contains(std::string(k.str())))
        fail(fmt::format("{}: unknown key", key_name(k.str())));
    }
  }

 private:
  const toml::table& table_;
  std::string section_;
  std::set<std::string, std::less<>> seen_;
};

const toml::table& require_table(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (!node || !node->as_table()) fail(fmt::format("[{}]: required section missing", name));
  return *node->as_table();
}

const toml::array* array_of_tables(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (!node) return nullptr;
  const toml::array* arr = node->as_array();
  if (!arr || !arr->is_array_of_tables())
    fail(fmt::format("[[{}]]: expected an array of tables", name));
  return arr;
}

SiteRole parse_role(const std::string& s, const std::string& key) {
  if (s == "tx_rx") return SiteRole::tx_rx;
  if (s == "tx_only") return SiteRole::tx_only;
  if (s == "rx_only") return SiteRole::rx_only;
  fail(fmt::format("{}: expected one of tx_rx, tx_only, rx_only", key));
}

Pipeline parse_pipeline(const std::string& s, const std::string& key) {
  if (s == "cooperative_active") return Pipeline::cooperative_active;
  if (s == "active_passive") return Pipeline::active_passive;
  if (s == "beam_registration") return Pipeline::beam_registration;
  fail(fmt::format("{}: expected one of cooperative_active, active_passive, beam_registration",
                   key));
}

int to_int(std::int64_t v, const std::string& key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    fail(fmt::format("{}: out of range", key));
  return static_cast<int>(v);
}

}  // namespace

void validate_scenario(const ScenarioConfig& c) {
  const Numerology& nu = c.numerology;
  if (!(nu.carrier_freq_hz > 0.0)) fail("numerology.carrier_freq_hz: must be > 0");
  if (!(nu.subcarrier_spacing_hz > 0.0)) fail("numerology.subcarrier_spacing_hz: must be > 0");
  if (nu.num_subcarriers < 2) fail("numerology.num_subcarriers: must be >= 2");
  if (nu.num_symbols < 2) fail("numerology.num_symbols: must be >= 2");
  if (!(nu.cp_fraction >= 0.0 && nu.cp_fraction <= 0.5))
    fail("numerology.cp_fraction: must lie in [0, 0.5]");
  if (c.trials < 1) fail("experiment.trials: must be >= 1");

  for (std::size_t i = 0; i < c.sites.size(); ++i) {
    const BsSite& s = c.sites[i];
    if (s.array_rows < 1 || s.array_cols < 1)
      fail(fmt::format("site[{}].array_rows/array_cols: must be >= 1", i));
    if (!(s.element_spacing_wavelengths > 0.0))
      fail(fmt::format("site[{}].element_spacing_wavelengths: must be > 0", i));
    if (!s.position_m.allFinite()) fail(fmt::format("site[{}].position_m: must be finite", i));
    for (std::size_t j = 0; j < i; ++j) {
      if (c.sites[j].id == s.id) fail(fmt::format("site[{}].id: duplicate id {}", i, s.id));
      if (c.sites[j].position_m == s.position_m)
        fail(fmt::format("site[{}].position_m: coincides with site[{}]", i, j));
    }
  }

  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const Target& t = c.targets[i];
    if (!(std::abs(t.amplitude) > 0.0)) fail(fmt::format("target[{}].amplitude: |a| must be > 0", i));
    if (!t.position_m.allFinite() || !t.velocity_mps.allFinite())
      fail(fmt::format("target[{}]: position and velocity must be finite", i));
  }

  const double max_range = nu.max_monostatic_range_m();
  const double max_doppler = nu.max_doppler_hz();
  for (std::size_t i = 0; i < c.links.size(); ++i) {
    const LinkSpec& l = c.links[i];
    const BsSite* tx = nullptr;
    const BsSite* rx = nullptr;
    for (const auto& s : c.sites) {
      if (s.id == l.tx_site_id) tx = &s;
      if (s.id == l.rx_site_id) rx = &s;
    }
    if (!tx) fail(fmt::format("link[{}].tx_site: site id {} does not exist", i, l.tx_site_id));
    if (!rx) fail(fmt::format("link[{}].rx_site: site id {} does not exist", i, l.rx_site_id));
    if (!tx->can_transmit())
      fail(fmt::format("link[{}].tx_site: site {} has role rx_only", i, tx->id));
    if (!rx->can_receive())
      fail(fmt::format("link[{}].rx_site: site {} has role tx_only", i, rx->id));
    if (l.monostatic() && (!l.sync_error.is_zero() || !l.jitter.is_zero()))
      fail(fmt::format("link[{}]: monostatic links must have zero timing/frequency offsets", i));
    if (std::isnan(l.snr_db)) fail(fmt::format("link[{}].snr_db: must be a number", i));

    for (std::size_t k = 0; k < c.targets.size(); ++k) {
      const Target& t = c.targets[k];
      if (l.monostatic()) {
        const double r = (t.position_m - tx->position_m).norm();
        if (r >= max_range)
          fail(fmt::format(
              "target[{}].position_m: monostatic range {:.1f} m from site {} exceeds unambiguous "
              "window c/(2*subcarrier_spacing_hz) = {:.1f} m",
              k, r, tx->id, max_range));
      }
      double fd = 0.0;
      try {
        fd = bistatic_doppler(t.position_m, t.velocity_mps, tx->position_m, rx->position_m,
                              nu.carrier_freq_hz);
      } catch (const GeometryError&) {
        fail(fmt::format("target[{}].position_m: coincides with a site of link[{}]", k, i));
      }
      if (std::abs(fd) >= max_doppler)
        fail(fmt::format(
            "target[{}].velocity_mps: Doppler {:.1f} Hz on link[{}] exceeds unambiguous window "
            "1/(2*symbol_duration) = {:.1f} Hz",
            k, fd, i, max_doppler));
    }
  }

  const ExperimentSpec& e = c.experiment;
  if (e.zero_pad_range < 1 || e.zero_pad_doppler < 1)
    fail("experiment.zero_pad_range/zero_pad_doppler: must be >= 1");
  if (!(e.kappa > 0.0)) fail("experiment.kappa: must be > 0");
  if (e.refine_grid < 1) fail("experiment.refine_grid: must be >= 1");
  if (!(e.refine_shrink_cells > 0.0)) fail("experiment.refine_shrink_cells: must be > 0");
  if (e.refine_max_iterations < 1) fail("experiment.refine_max_iterations: must be >= 1");
  if (!(e.synthesis_grid_fraction > 0.0 && e.synthesis_grid_fraction <= 1.0))
    fail("experiment.synthesis_grid_fraction: must lie in (0, 1]");
  if (e.sweep.variable != "none") {
    if (!(e.sweep.step > 0.0)) fail("experiment.sweep_step: must be > 0");
    if (!(e.sweep.stop >= e.sweep.start)) fail("experiment.sweep_stop: must be >= sweep_start");
  }
}

ScenarioConfig load_scenario(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& err) {
    fail(fmt::format("parse error at line {}: {}", err.source().begin.line, err.description()));
  }

  ScenarioConfig c;
  for (const auto& [k, v] : root) {
    const std::string_view key = k.str();
    if (key != "numerology" && key != "site" && key != "target" && key != "link" &&
        key != "experiment")
      fail(fmt::format("{}: unknown section", key));
  }

  {
    TableReader r(require_table(root, "numerology"), "numerology");
    c.numerology.carrier_freq_hz = r.real("carrier_freq_hz");
    c.numerology.subcarrier_spacing_hz = r.real("subcarrier_spacing_hz");
    c.numerology.num_subcarriers = to_int(r.integer("num_subcarriers"), "numerology.num_subcarriers");
    c.numerology.num_symbols = to_int(r.integer("num_symbols"), "numerology.num_symbols");
    c.numerology.cp_fraction = r.real("cp_fraction", 0.125);
    r.finish();
  }

  if (const toml::array* arr = array_of_tables(root, "site")) {
    int index = 0;
    for (const auto& node : *arr) {
      TableReader r(*node.as_table(), fmt::format("site[{}]", index));
      BsSite s;
      s.id = to_int(r.integer("id"), r.key_name("id"));
      s.position_m = r.vec3("position_m");
      s.array_rows = to_int(r.integer("array_rows", 1), r.key_name("array_rows"));
      s.array_cols = to_int(r.integer("array_cols", 1), r.key_name("array_cols"));
      s.element_spacing_wavelengths = r.real("element_spacing_wavelengths", 0.5);
      s.role = parse_role(r.text("role", "tx_rx"), r.key_name("role"));
      r.finish();
      c.sites.push_back(s);
      ++index;
    }
  }

  if (const toml::array* arr = array_of_tables(root, "target")) {
    int index = 0;
    for (const auto& node : *arr) {
      TableReader r(*node.as_table(), fmt::format("target[{}]", index));
      Target t;
      t.position_m = r.vec3("position_m");
      t.velocity_mps = r.vec3("velocity_mps", Vec3::Zero());
      const auto amp = r.reals("amplitude", 2, std::vector<double>{1.0, 0.0});
      t.amplitude = {amp[0], amp[1]};
      r.finish();
      c.targets.push_back(t);
      ++index;
    }
  }

  if (const toml::array* arr = array_of_tables(root, "link")) {
    int index = 0;
    for (const auto& node : *arr) {
      TableReader r(*node.as_table(), fmt::format("link[{}]", index));
      LinkSpec l;
      l.tx_site_id = to_int(r.integer("tx_site"), r.key_name("tx_site"));
      l.rx_site_id = to_int(r.integer("rx_site"), r.key_name("rx_site"));
      l.snr_db = r.real("snr_db", 0.0);
      l.sync_error.timing_offset_s = r.real("timing_offset_s", 0.0);
      l.sync_error.cfo_hz = r.real("cfo_hz", 0.0);
      l.jitter.timing_std_s = r.real("timing_jitter_s", 0.0);
      l.jitter.cfo_std_hz = r.real("cfo_jitter_hz", 0.0);
      r.finish();
      c.links.push_back(l);
      ++index;
    }
  }

  if (const toml::node* node = root.get("experiment")) {
    if (!node->as_table()) fail("[experiment]: expected a table");
    TableReader r(*node->as_table(), "experiment");
    ExperimentSpec& e = c.experiment;
    e.pipeline = parse_pipeline(r.text("pipeline", "cooperative_active"), r.key_name("pipeline"));
    c.trials = to_int(r.integer("trials", 1), r.key_name("trials"));
    const std::int64_t seed = r.integer("seed", 1);
    if (seed < 0) fail("experiment.seed: must be >= 0");
    c.master_seed = static_cast<std::uint64_t>(seed);
    e.sweep.variable = r.text("sweep_variable", "none");
    e.sweep.start = r.real("sweep_start", 0.0);
    e.sweep.stop = r.real("sweep_stop", e.sweep.start);
    e.sweep.step = r.real("sweep_step", 1.0);
    e.zero_pad_range = to_int(r.integer("zero_pad_range", 4), r.key_name("zero_pad_range"));
    e.zero_pad_doppler = to_int(r.integer("zero_pad_doppler", 4), r.key_name("zero_pad_doppler"));
    e.kappa = r.real("kappa", 2.0);
    e.refine_grid = to_int(r.integer("refine_grid", 8), r.key_name("refine_grid"));
    e.refine_shrink_cells = r.real("refine_shrink_cells", 1.5);
    e.refine_max_iterations =
        to_int(r.integer("refine_max_iterations", 6), r.key_name("refine_max_iterations"));
    e.refine_position_tol_m = r.real("refine_position_tol_m", 0.05);
    e.refine_velocity_tol_mps = r.real("refine_velocity_tol_mps", 0.05);
    e.fusion_site_id = to_int(
        r.integer("fusion_site", c.sites.empty() ? 0 : c.sites.front().id), r.key_name("fusion_site"));
    e.area_center_m = r.vec3("area_center_m", Vec3::Zero());
    e.synthesis_grid_fraction = r.real("synthesis_grid_fraction", 0.125);
    r.finish();
  } else if (!c.sites.empty()) {
    c.experiment.fusion_site_id = c.sites.front().id;
  }

  validate_scenario(c);
  return c;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("cannot open configuration file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  // Shortest round-tripping form, always with a decimal point or exponent.
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string vec(const Vec3& v) { return fmt::format("[{}, {}, {}]", num(v.x()), num(v.y()), num(v.z())); }

}  // namespace

std::string serialize_scenario(const ScenarioConfig& c) {
  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };
  const Numerology& nu = c.numerology;
  line("[numerology]");
  line("carrier_freq_hz = " + num(nu.carrier_freq_hz));
  line("subcarrier_spacing_hz = " + num(nu.subcarrier_spacing_hz));
  line(fmt::format("num_subcarriers = {}", nu.num_subcarriers));
  line(fmt::format("num_symbols = {}", nu.num_symbols));
  line("cp_fraction = " + num(nu.cp_fraction));

  for (const auto& s : c.sites) {
    line("");
    line("[[site]]");
    line(fmt::format("id = {}", s.id));
    line("position_m = " + vec(s.position_m));
    line(fmt::format("array_rows = {}", s.array_rows));
    line(fmt::format("array_cols = {}", s.array_cols));
    line("element_spacing_wavelengths = " + num(s.element_spacing_wavelengths));
    line(fmt::format("role = \"{}\"", to_string(s.role)));
  }
  for (const auto& t : c.targets) {
    line("");
    line("[[target]]");
    line("position_m = " + vec(t.position_m));
    line("velocity_mps = " + vec(t.velocity_mps));
    line(fmt::format("amplitude = [{}, {}]", num(t.amplitude.real()), num(t.amplitude.imag())));
  }
  for (const auto& l : c.links) {
    line("");
    line("[[link]]");
    line(fmt::format("tx_site = {}", l.tx_site_id));
    line(fmt::format("rx_site = {}", l.rx_site_id));
    line("snr_db = " + num(l.snr_db));
    line("timing_offset_s = " + num(l.sync_error.timing_offset_s));
    line("cfo_hz = " + num(l.sync_error.cfo_hz));
    line("timing_jitter_s = " + num(l.jitter.timing_std_s));
    line("cfo_jitter_hz = " + num(l.jitter.cfo_std_hz));
  }
  const ExperimentSpec& e = c.experiment;
  line("");
  line("[experiment]");
  line(fmt::format("pipeline = \"{}\"", to_string(e.pipeline)));
  line(fmt::format("trials = {}", c.trials));
  line(fmt::format("seed = {}", c.master_seed));
  line(fmt::format("sweep_variable = \"{}\"", e.sweep.variable));
  line("sweep_start = " + num(e.sweep.start));
  line("sweep_stop = " + num(e.sweep.stop));
  line("sweep_step = " + num(e.sweep.step));
  line(fmt::format("zero_pad_range = {}", e.zero_pad_range));
  line(fmt::format("zero_pad_doppler = {}", e.zero_pad_doppler));
  line("kappa = " + num(e.kappa));
  line(fmt::format("refine_grid = {}", e.refine_grid));
  line("refine_shrink_cells = " + num(e.refine_shrink_cells));
  line(fmt::format("refine_max_iterations = {}", e.refine_max_iterations));
  line("refine_position_tol_m = " + num(e.refine_position_tol_m));
  line("refine_velocity_tol_mps = " + num(e.refine_velocity_tol_mps));
  line(fmt::format("fusion_site = {}", e.fusion_site_id));
  line("area_center_m = " + vec(e.area_center_m));
  line("synthesis_grid_fraction = " + num(e.synthesis_grid_fraction));
  return out;
}

std::uint64_t scenario_hash(const ScenarioConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : serialize_scenario(config)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace isac
