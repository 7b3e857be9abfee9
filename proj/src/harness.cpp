#include "nvdnp/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "nvdnp/analytics.hpp"
#include "nvdnp/errors.hpp"

namespace nvdnp {

using nlohmann::json;
namespace fs = std::filesystem;

std::string toolkit_version() {
#ifdef NVDNP_VERSION
  return NVDNP_VERSION;
#else
  return "unknown";
#endif
}

json RunManifest::to_json() const {
  return json{{"subcommand", subcommand}, {"config_hash", config_hash}, {"version", version},
              {"wall_time_s", wall_time},  {"files", files},             {"summary", summary}};
}

double ideal_transfer_time(const SpinRegister& reg, double tau, double omega, bool instantaneous, Observed observe,
                           double alpha) {
  const double att = instantaneous ? 1.0 : finite_pulse_attenuation(omega, tau);
  const double a = std::abs(reg.couplings.a_zz) * att;
  if (observe == Observed::Electron) {
    if (a == 0.0) throw ConfigError("ideal transfer time needs a non-zero NV-electron coupling");
    return kTwoPi / a;
  }
  if (reg.nuclei_count() == 0) throw ConfigError("ideal transfer time: register has no nucleus");
  const double b = alpha * reg.couplings.nuclei[0].perp();
  const double w = std::sqrt(a * a + b * b);
  if (w == 0.0) throw ConfigError("ideal transfer time needs non-zero couplings");
  return 2.0 * kTwoPi / w;
}

OverlayResult buildup_overlay(const TimeSeries& ts, const SpinRegister& reg, double alpha, double tau,
                              int blocks_per_cycle) {
  if (blocks_per_cycle < 1) throw ConfigError("overlay needs periodic reinitialization");
  OverlayResult out;
  out.cycle = 2.0 * blocks_per_cycle * tau;
  std::vector<double> b;
  for (const auto& n : reg.couplings.nuclei) b.push_back(n.perp());
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.rates.push_back(cooling_rate_discrete(i, out.cycle, reg.couplings.a_zz, b, alpha));
  }

  const std::size_t per_cycle = 2 * static_cast<std::size_t>(blocks_per_cycle);
  std::vector<std::size_t> ends;
  for (std::size_t s = per_cycle; s < ts.size(); s += per_cycle) ends.push_back(s);
  for (std::size_t s : ends) out.cycle_end_times.push_back(ts.times[s]);

  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& col = ts.nuclei[i];
    double sign = 1.0;
    if (!ends.empty() && col[ends.back()] < 0.0) sign = -1.0;
    double acc = 0.0;
    for (std::size_t s : ends) {
      const double d = sign * col[s] - buildup_exponential(0.0, out.rates[i], ts.times[s]);
      acc += d * d;
    }
    out.rms.push_back(ends.empty() ? 0.0 : std::sqrt(acc / ends.size()));
  }
  return out;
}

namespace {

double mhz(double angular) { return to_linear(angular); }

json plan_json(const ProtocolPlan& p) {
  return json{{"protocol", protocol_name(p.protocol)},
              {"tau_us", p.tau},
              {"a_zz_mhz", mhz(p.a_zz)},
              {"b0_mhz", mhz(p.b0)},
              {"blocks", p.cycle.blocks},
              {"cycle_us", p.cycle.cycle},
              {"objective", p.cycle.objective},
              {"continuous_cycle_us", p.cycle.continuous_cycle},
              {"continuous_objective", p.cycle.continuous_objective}};
}

}  // namespace

json analytics_record(const ExperimentConfig& c) {
  json out;
  const auto& k = c.constants;
  out["constants"] = {
      {"gamma_e_mhz_per_g", mhz(k.gamma_e)},
      {"gamma_n_mhz_per_g", mhz(k.gamma_n)},
      {"dipolar_ee_prefactor_mhz_nm3", mhz(k.dipolar_ee_prefactor)},
      {"dipolar_en_prefactor_mhz_nm3", mhz(PhysicalConstants::dipolar_prefactor(k.gamma_e, k.gamma_n))}};

  const SpinRegister reg = c.spin_register();
  json b;
  for (const auto& n : reg.couplings.nuclei) b.push_back(mhz(n.perp()));
  out["couplings"] = {{"a_zz_mhz", mhz(reg.couplings.a_zz)}, {"b_perp_mhz", b}};
  if (!c.couplings) {
    const Vec3& e = c.geometry.electron_position;
    out["geometry"] = {{"electron_nm", {e.x(), e.y(), e.z()}},
                       {"nv_electron_distance_nm", (e - c.geometry.nv_position()).norm()}};
  }

  if (c.geometry.field > 0.0 || c.sequence.tau) {
    const double tau = c.tau();
    out["sequence"] = {{"tau_us", tau}, {"block_us", 2.0 * tau}};
    if (!c.sequence.instantaneous && c.sequence.omega * tau > kPi) {
      out["sequence"]["attenuation"] = finite_pulse_attenuation(c.sequence.omega, tau);
    }
    if (c.sequence.harmonic == 1 || c.sequence.harmonic == 3) {
      const double alpha = alpha_coefficient(c.sequence.harmonic);
      out["sequence"]["alpha"] = alpha;
      if (!c.couplings) {
        const double r = (c.geometry.electron_position - c.geometry.nv_position()).norm();
        const double d = optimal_nucleus_distance(r, alpha, k.gamma_n, k.gamma_e);
        out["optimal_nucleus_distance_nm"] = d;
      }
      if (reg.nuclei_count() > 0 && c.reinit.blocks_per_cycle > 0) {
        std::vector<double> bp;
        for (const auto& n : reg.couplings.nuclei) bp.push_back(n.perp());
        const double cycle = 2.0 * c.reinit.blocks_per_cycle * tau;
        json rates;
        for (std::size_t i = 0; i < bp.size(); ++i) {
          rates.push_back(cooling_rate_discrete(i, cycle, reg.couplings.a_zz, bp, alpha));
        }
        out["discrete_cooling"] = {{"cycle_us", cycle}, {"rates_per_us", rates},
                                   {"b0_mhz", mhz(aggregate_b0(bp))}};
      }
    }
  }

  if (c.continuum) {
    const auto& p = c.continuum->problem;
    out["diffusion_nm2_per_s"] = effective_diffusion(p);
    out["diffusion_length_nm"] = std::sqrt(effective_diffusion(p) / p.gamma1);
    out["hemisphere_b0_mhz"] =
        mhz(hemisphere_b0(p.grid.density, PhysicalConstants::dipolar_prefactor(k.gamma_e, k.gamma_n), p.grid.r_min));
    json plans;
    for (Protocol proto : c.protocols) plans[protocol_name(proto)] = plan_json(plan_protocol(p, proto));
    out["cycle_optimum"] = plans;
  }
  return out;
}

namespace {

class Emitter {
 public:
  Emitter(fs::path dir, RunManifest& m) : dir_(std::move(dir)), manifest_(m) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (dir_ / name).string());
    manifest_.files.push_back(name);
    return os;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  RunManifest& manifest_;
};

void run_simulate(const ExperimentConfig& c, Emitter& out, RunManifest& m) {
  if (!c.simulate) throw ConfigError("config: simulate: missing required block");
  const auto& s = *c.simulate;
  const SpinRegister reg = c.spin_register();
  const PulseSchedule sched = c.schedule();
  const DensityMatrix thermal = thermal_initial_state(reg);

  TimeSeries ts;
  if (s.engine == Engine::Lindblad) {
    const DensityMatrix init = reinitialize_nv(thermal, c.noise.nv_init_fidelity, c.noise.mixture);
    ts = run_lindblad(sched, reg, c.noise, init, c.reinit, s.total_time);
  } else {
    ts = run_unitary(sched, reg, thermal, c.reinit, s.total_time);
  }
  {
    auto os = out.open("timeseries.csv");
    ts.write_csv(os);
  }
  m.summary["strobes"] = ts.size();
  m.summary["tau_us"] = sched.tau;
  m.summary["final"] = {{"pol_nv", ts.nv.back()}, {"pol_e", ts.electron.back()}};
  for (std::size_t k = 0; k < ts.nuclei.size(); ++k) {
    m.summary["final"]["pol_n" + std::to_string(k + 1)] = ts.nuclei[k].back();
  }

  if (s.noiseless_reference) {
    const TimeSeries ref = run_unitary(sched, reg, thermal, c.reinit, s.total_time);
    auto os = out.open("reference.csv");
    ref.write_csv(os);
  }

  if (s.overlay) {
    if (reg.nuclei_count() == 0) throw ConfigError("config: simulate.overlay: register has no nuclei");
    const double alpha = alpha_coefficient(c.sequence.harmonic);
    const OverlayResult ov = buildup_overlay(ts, reg, alpha, sched.tau, c.reinit.blocks_per_cycle);
    auto os = out.open("overlay.csv");
    os << "t_us";
    for (std::size_t i = 0; i < ov.rates.size(); ++i) os << ",model_n" << (i + 1);
    os << '\n';
    for (double t : ts.times) {
      os << format_number(t);
      for (double u : ov.rates) os << ',' << format_number(buildup_exponential(0.0, u, t));
      os << '\n';
    }
    m.summary["overlay"] = {{"cycle_us", ov.cycle}, {"rates_per_us", ov.rates}, {"rms", ov.rms}};
  }
}

void run_sweep(const ExperimentConfig& c, const RunOptions& opt, Emitter& out, RunManifest& m) {
  if (!c.sweep) throw ConfigError("config: sweep: missing required block");
  if (c.sequence.instantaneous) throw ConfigError("config: sequence.instantaneous: sweeps need finite pulses");
  const auto& s = *c.sweep;
  RobustnessBase base;
  base.reg = c.spin_register();
  base.tau = c.tau();
  base.omega = c.sequence.omega;
  base.observed_site = s.observe == Observed::Electron ? 1 : 2;
  base.detuning_e = c.sequence.errors.detuning_e;
  const double alpha = s.observe == Observed::Nucleus ? alpha_coefficient(c.sequence.harmonic) : 0.0;
  const double ideal_time = ideal_transfer_time(base.reg, base.tau, base.omega, false, s.observe, alpha);
  base.horizon = s.horizon_factor * ideal_time;

  const RobustnessGrid grid = robustness_sweep(base, s.detuning_nv, s.rabi_error, opt.workers);
  const Extremum ideal = robustness_point(base, 0.0, 0.0);
  {
    auto os = out.open("sweep.csv");
    grid.write_csv(os);
  }
  {
    auto os = out.open("sweep_times.csv");
    os << "detuning_nv_mhz";
    for (double cval : grid.rabi_error) os << ',' << format_number(mhz(cval));
    os << '\n';
    for (std::size_t i = 0; i < grid.detuning_nv.size(); ++i) {
      os << format_number(mhz(grid.detuning_nv[i]));
      for (double v : grid.extremum_time[i]) os << ',' << format_number(v);
      os << '\n';
    }
  }
  m.summary = {{"observe", s.observe == Observed::Electron ? "electron" : "nucleus"},
               {"tau_us", base.tau},
               {"horizon_us", base.horizon},
               {"ideal_max", ideal.value},
               {"ideal_time_us", ideal.time}};
}

void write_buildup(std::ostream& os, const ConvergenceRecord& rec) {
  os << "t_s,N\n";
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    os << format_number(rec.times[i]) << ',' << format_number(rec.count[i]) << '\n';
  }
}

void run_continuum(const ExperimentConfig& c, Emitter& out, RunManifest& m) {
  if (!c.continuum) throw ConfigError("config: continuum: missing required block");
  const auto& cc = *c.continuum;
  json results;
  for (Protocol proto : c.protocols) {
    const std::string name = protocol_name(proto);
    const ContinuumResult r = solve_protocol(cc.problem, proto);
    const auto& grid = cc.problem.grid;
    {
      auto os = out.open(name + "_slice_xy.csv");
      write_slice_xy(os, grid, r.steady, 0);
    }
    {
      auto os = out.open(name + "_slice_xz.csv");
      write_slice_xz(os, grid, r.steady, 0.0);
    }
    {
      auto os = out.open(name + "_buildup.csv");
      write_buildup(os, r.convergence);
    }
    if (cc.write_full_map) {
      auto os = out.open(name + "_map.csv");
      write_map(os, grid, r.steady);
    }
    json conv = {{"converged_time_s", r.convergence.converged_time},
                 {"steps", r.convergence.steps},
                 {"dt_s", r.convergence.dt},
                 {"residual_per_s", r.convergence.residual},
                 {"tolerance", cc.problem.steady.tolerance},
                 {"gamma1_per_s", cc.problem.gamma1}};
    {
      auto os = out.open(name + "_convergence.json");
      os << conv.dump(2) << '\n';
    }
    results[name] = {{"tau_us", r.tau},
                     {"blocks", r.cycle.blocks},
                     {"cycle_us", r.cycle.cycle},
                     {"b0_mhz", mhz(r.rates.b0)},
                     {"a_zz_mhz", mhz(r.rates.a_zz)},
                     {"max_rate_per_s", r.rates.field.max()},
                     {"diffusion_nm2_per_s", r.diffusion},
                     {"spin_count", r.spin_count},
                     {"half_mass_radius_nm", r.half_mass_radius},
                     {"converged_time_s", r.convergence.converged_time}};
  }
  if (!cc.t2_sweep.empty()) {
    const auto pts = t2_sweep(cc.problem, cc.t2_sweep);
    auto os = out.open("t2_sweep.csv");
    os << "t2_e_us,blocks,N\n";
    json sweep;
    for (const auto& p : pts) {
      os << format_number(p.t2_e) << ',' << p.blocks << ',' << format_number(p.spin_count) << '\n';
      sweep.push_back({{"t2_e_us", p.t2_e}, {"blocks", p.blocks}, {"spin_count", p.spin_count}});
    }
    results["t2_sweep"] = sweep;
  }
  m.summary = results;
}

void run_analytics(const ExperimentConfig& c, Emitter& out, RunManifest& m) {
  const json record = analytics_record(c);
  auto os = out.open("analytics.json");
  os << record.dump(2) << '\n';
  m.summary = record;
}

}  // namespace

RunManifest run_subcommand(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.subcommand = subcommand;
  m.config_hash = config.hash;
  m.version = toolkit_version();
  m.summary = json::object();

  const fs::path dir = options.out_dir.empty() ? fs::path(config.output_dir) : options.out_dir;
  Emitter out(dir, m);
  if (subcommand == "simulate") {
    run_simulate(config, out, m);
  } else if (subcommand == "sweep") {
    run_sweep(config, options, out, m);
  } else if (subcommand == "continuum") {
    run_continuum(config, out, m);
  } else if (subcommand == "analytics") {
    run_analytics(config, out, m);
  } else {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }

  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json mj = m.to_json();
  if (options.seed) mj["seed"] = *options.seed;
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  os << mj.dump(2) << '\n';
  return m;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 1;
}

}  // namespace nvdnp
