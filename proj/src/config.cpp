#include "nvdnp/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nvdnp/errors.hpp"

namespace nvdnp {

using nlohmann::json;

std::string config_hash(const json& j) {
  const std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

double deg_to_rad(double d) { return d * kPi / 180.0; }

// A JSON object plus its dotted path for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

  Node child(const std::string& key) const { return Node(at(key), join(key)); }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }
  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  int integer_or(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Vec3 vec3(const std::string& key) const {
    const auto v = numbers(key);
    if (v.size() != 3) fail(key, "expected three coordinates");
    return {v[0], v[1], v[2]};
  }

  const json& at(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    return (*j_)[key];
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config: " + join(key) + ": " + what);
  }

  std::string join(const std::string& key) const {
    if (key.empty()) return path_.empty() ? std::string("<root>") : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw() const { return *j_; }

 private:
  const json* j_;
  std::string path_;
};

// Range in MHz: either {"values": [...]} or {"min", "max", "count"}; returned angular.
std::vector<double> parse_axis(const Node& n) {
  std::vector<double> mhz;
  if (n.has("values")) {
    mhz = n.numbers("values");
  } else {
    const double lo = n.number("min"), hi = n.number("max");
    const int count = n.integer("count");
    if (count < 1) n.fail("count", "must be at least 1");
    for (int k = 0; k < count; ++k) mhz.push_back(count == 1 ? lo : lo + (hi - lo) * k / (count - 1));
  }
  if (mhz.empty()) n.fail("", "empty axis");
  std::vector<double> out;
  for (double v : mhz) out.push_back(to_angular(v));
  return out;
}

SiteNoise parse_site(const Node& n) {
  SiteNoise s;
  s.t1 = n.number_or("t1_us", kNever);
  s.t2 = n.number_or("t2_us", kNever);
  if (!(s.t1 > 0.0)) n.fail("t1_us", "must be positive");
  if (!(s.t2 > 0.0)) n.fail("t2_us", "must be positive");
  if (s.t2 > 2.0 * s.t1 * (1.0 + 1e-12)) n.fail("t2_us", "violates T2 <= 2 T1");
  return s;
}

}  // namespace

SpinRegister ExperimentConfig::spin_register() const {
  if (couplings) {
    SpinRegister reg;
    reg.couplings.a_zz = couplings->a_zz;
    for (double b : couplings->b_perp) reg.couplings.nuclei.push_back(SecularCoupling::transverse(b));
    reg.nuclear_larmor = constants.gamma_n * geometry.field;
    return reg;
  }
  return SpinRegister::from_geometry(geometry, constants);
}

double ExperimentConfig::tau() const {
  if (sequence.tau) return *sequence.tau;
  return resonance_spacing(sequence.harmonic, constants.gamma_n, geometry.field);
}

PulseSchedule ExperimentConfig::schedule() const {
  return build_schedule(tau(), sequence.omega, sequence.blocks, sequence.errors, sequence.instantaneous);
}

ExperimentConfig parse_config(const json& j) {
  const Node root(j, "");
  ExperimentConfig c;
  c.raw = j;
  c.hash = config_hash(j);
  c.output_dir = root.string_or("output_dir", "out");

  if (root.has("constants")) {
    const Node n = root.child("constants");
    if (n.has("gamma_e_mhz_per_g")) c.constants.gamma_e = to_angular(n.number("gamma_e_mhz_per_g"));
    if (n.has("gamma_n_mhz_per_g")) c.constants.gamma_n = to_angular(n.number("gamma_n_mhz_per_g"));
    c.constants.dipolar_ee_prefactor = PhysicalConstants::dipolar_prefactor(c.constants.gamma_e, c.constants.gamma_e);
  }

  bool electron_optimal = true;
  if (root.has("geometry")) {
    const Node n = root.child("geometry");
    c.geometry = SystemGeometry::tilted(n.number_or("nv_depth_nm", 3.5), deg_to_rad(n.number_or("tilt_deg", 0.0)),
                                        n.number_or("field_g", 0.0));
    if (c.geometry.field < 0.0) n.fail("field_g", "must be non-negative");
    if (n.has("electron_nm")) {
      if (n.at("electron_nm").is_string()) {
        if (n.string("electron_nm") != "optimal") n.fail("electron_nm", "expected [x, y, z] or \"optimal\"");
      } else {
        c.geometry.electron_position = n.vec3("electron_nm");
        electron_optimal = false;
        if (std::abs(c.geometry.electron_position.z()) > 1e-12) n.fail("electron_nm", "electron must lie on z = 0");
      }
    }
    if (n.has("nuclei_nm")) {
      const json& arr = n.at("nuclei_nm");
      if (!arr.is_array()) n.fail("nuclei_nm", "expected an array of [x, y, z]");
      for (std::size_t k = 0; k < arr.size(); ++k) {
        const auto& e = arr[k];
        if (!e.is_array() || e.size() != 3) n.fail("nuclei_nm[" + std::to_string(k) + "]", "expected [x, y, z]");
        c.geometry.nuclei.emplace_back(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
      }
    }
    try {
      c.geometry.validate();
    } catch (const ConfigError& e) {
      n.fail("", e.what());
    }
  }

  if (root.has("couplings")) {
    const Node n = root.child("couplings");
    CouplingOverride o;
    o.a_zz = to_angular(n.number("a_zz_mhz"));
    if (n.has("b_perp_mhz")) {
      for (double b : n.numbers("b_perp_mhz")) o.b_perp.push_back(to_angular(b));
    }
    c.couplings = o;
  } else if (electron_optimal) {
    c.geometry.electron_position = optimal_electron_position(c.geometry, c.constants);
  }

  if (root.has("sequence")) {
    const Node n = root.child("sequence");
    c.sequence.harmonic = n.integer_or("harmonic", 3);
    if (n.has("tau_us")) {
      c.sequence.tau = n.number("tau_us");
      if (!(*c.sequence.tau > 0.0)) n.fail("tau_us", "must be positive");
    }
    c.sequence.omega = to_angular(n.number_or("rabi_mhz", 20.0));
    c.sequence.blocks = n.integer_or("blocks", 1);
    if (c.sequence.blocks < 1) n.fail("blocks", "must be at least 1");
    c.sequence.instantaneous = n.boolean_or("instantaneous", false);
    if (n.has("errors")) {
      const Node e = n.child("errors");
      const double shared = e.number_or("rabi_error_mhz", 0.0);
      c.sequence.errors.detuning_nv = to_angular(e.number_or("detuning_nv_mhz", 0.0));
      c.sequence.errors.detuning_e = to_angular(e.number_or("detuning_e_mhz", 0.0));
      c.sequence.errors.rabi_error_nv = to_angular(e.number_or("rabi_error_nv_mhz", shared));
      c.sequence.errors.rabi_error_e = to_angular(e.number_or("rabi_error_e_mhz", shared));
    }
    if (!c.sequence.tau && !(c.geometry.field > 0.0)) {
      n.fail("tau_us", "required when geometry.field_g is not set");
    }
  }

  const std::size_t nuclei = c.couplings ? c.couplings->b_perp.size() : c.geometry.nuclei.size();
  if (root.has("noise")) {
    const Node n = root.child("noise");
    c.has_noise = true;
    const SiteNoise nv = n.has("nv") ? parse_site(n.child("nv")) : SiteNoise{};
    const SiteNoise e = n.has("electron") ? parse_site(n.child("electron")) : SiteNoise{};
    const SiteNoise nuc = n.has("nuclei") ? parse_site(n.child("nuclei")) : SiteNoise{};
    c.noise.sites = {nv, e};
    for (std::size_t k = 0; k < nuclei; ++k) c.noise.sites.push_back(nuc);
    c.noise.nv_init_fidelity = n.number_or("nv_init_fidelity", 1.0);
    if (c.noise.nv_init_fidelity < 0.0 || c.noise.nv_init_fidelity > 1.0) n.fail("nv_init_fidelity", "must lie in [0, 1]");
    c.noise.dead_time = n.number_or("dead_time_us", 0.0);
    if (c.noise.dead_time < 0.0) n.fail("dead_time_us", "must be non-negative");
    const std::string mix = n.string_or("reset_mixture", "mixed");
    if (mix == "mixed") {
      c.noise.mixture = ResetMixture::Mixed;
    } else if (mix == "flipped") {
      c.noise.mixture = ResetMixture::Flipped;
    } else {
      n.fail("reset_mixture", "expected \"mixed\" or \"flipped\"");
    }
  }

  if (root.has("reinit")) {
    const Node n = root.child("reinit");
    c.reinit.blocks_per_cycle = n.integer_or("blocks_per_cycle", 0);
    if (c.reinit.blocks_per_cycle < 0) n.fail("blocks_per_cycle", "must be non-negative");
    const std::string mode = n.string_or("mode", "instantaneous");
    if (mode == "instantaneous") {
      c.reinit.mode = ResetMode::Instantaneous;
    } else if (mode == "dead_time") {
      c.reinit.mode = ResetMode::DeadTime;
    } else {
      n.fail("mode", "expected \"instantaneous\" or \"dead_time\"");
    }
  }

  if (root.has("simulate")) {
    const Node n = root.child("simulate");
    SimulateConfig s;
    s.total_time = n.number("total_time_us");
    if (s.total_time < 0.0) n.fail("total_time_us", "must be non-negative");
    const std::string engine = n.string_or("engine", "unitary");
    if (engine == "unitary") {
      s.engine = Engine::Unitary;
    } else if (engine == "lindblad") {
      s.engine = Engine::Lindblad;
      if (!c.has_noise) n.fail("engine", "lindblad engine needs a noise block");
    } else {
      n.fail("engine", "expected \"unitary\" or \"lindblad\"");
    }
    s.overlay = n.boolean_or("overlay", false);
    s.noiseless_reference = n.boolean_or("noiseless_reference", false);
    c.simulate = s;
  }

  if (root.has("sweep")) {
    const Node n = root.child("sweep");
    SweepConfig s;
    s.detuning_nv = parse_axis(n.child("detuning_nv_mhz"));
    s.rabi_error = parse_axis(n.child("rabi_error_mhz"));
    const std::string obs = n.string_or("observe", "electron");
    if (obs == "electron") {
      s.observe = Observed::Electron;
    } else if (obs == "nucleus") {
      s.observe = Observed::Nucleus;
      if (nuclei == 0) n.fail("observe", "nucleus observation needs at least one nucleus");
    } else {
      n.fail("observe", "expected \"electron\" or \"nucleus\"");
    }
    s.horizon_factor = n.number_or("horizon_factor", 1.5);
    if (!(s.horizon_factor > 0.0)) n.fail("horizon_factor", "must be positive");
    c.sweep = s;
  }

  if (root.has("protocol")) {
    const std::string p = root.string("protocol");
    if (p == "mediated") {
      c.protocols = {Protocol::Mediated};
    } else if (p == "direct") {
      c.protocols = {Protocol::Direct};
    } else if (p == "both") {
      c.protocols = {Protocol::Mediated, Protocol::Direct};
    } else {
      root.fail("protocol", "expected \"mediated\", \"direct\" or \"both\"");
    }
  }

  if (root.has("continuum")) {
    const Node n = root.child("continuum");
    ContinuumConfig cc;
    ContinuumProblem& p = cc.problem;
    p.geometry = c.geometry;
    p.constants = c.constants;
    if (!(p.geometry.field > 0.0)) n.fail("", "continuum runs need geometry.field_g");
    SampleGrid g;
    if (n.has("grid")) {
      const Node gn = n.child("grid");
      g.spacing = gn.number_or("spacing_nm", 1.0);
      g.nx = gn.integer_or("nx", 120);
      g.ny = gn.integer_or("ny", 120);
      g.nz = gn.integer_or("nz", 60);
      g.max_refinement = gn.integer_or("max_refinement", 6);
    }
    p.grid = SampleGrid::centered(p.geometry.electron_position, g.spacing, g.nx, g.ny, g.nz,
                                  n.number_or("density_nm3", 66.0), n.number_or("r_min_nm", 0.2));
    p.grid.max_refinement = g.max_refinement;
    try {
      p.grid.validate();
    } catch (const ConfigError& e) {
      n.fail("grid", e.what());
    }
    p.gamma1 = n.number_or("gamma1_per_s", 1.0);
    if (!(p.gamma1 > 0.0)) n.fail("gamma1_per_s", "must be positive");
    p.diffusion = n.number_or("diffusion_nm2_per_s", 0.0);
    if (p.diffusion < 0.0) n.fail("diffusion_nm2_per_s", "must be non-negative");
    p.fidelity = n.number_or("fidelity", 0.8);
    p.t2_e = n.number_or("t2_e_us", 1.0);
    p.t2_nv = n.number_or("t2_nv_us", 10.0);
    if (!(p.t2_e > 0.0)) n.fail("t2_e_us", "must be positive");
    if (!(p.t2_nv > 0.0)) n.fail("t2_nv_us", "must be positive");
    p.dead_time = n.number_or("dead_time_us", 2.0);
    p.harmonic_mediated = n.integer_or("harmonic_mediated", 1);
    p.harmonic_direct = n.integer_or("harmonic_direct", 3);
    p.alpha_mediated = n.has("alpha_mediated") ? n.number("alpha_mediated") : alpha_coefficient(p.harmonic_mediated);
    p.alpha_direct = n.number_or("alpha_direct", 0.72);
    p.max_blocks = n.integer_or("max_blocks", 64);
    p.steady.tolerance = n.number_or("tolerance", 1e-5);
    p.steady.record_interval = n.number_or("record_interval_s", 0.01);
    if (n.has("t2_sweep_us")) cc.t2_sweep = n.numbers("t2_sweep_us");
    cc.write_full_map = n.boolean_or("write_full_map", false);
    c.continuum = cc;
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace nvdnp
