#include "nvdnp/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <sstream>
#include <thread>

#include "nvdnp/errors.hpp"

namespace nvdnp {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void NoiseModel::validate() const {
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto& s = sites[k];
    if (!(s.t1 > 0.0) || !(s.t2 > 0.0)) {
      std::ostringstream msg;
      msg << "noise: site " << k << " needs positive T1 and T2";
      throw ConfigError(msg.str());
    }
    if (s.t2 > 2.0 * s.t1 * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "noise: site " << k << " violates T2 <= 2 T1 (T1 = " << s.t1 << ", T2 = " << s.t2 << ")";
      throw ConfigError(msg.str());
    }
  }
  if (nv_init_fidelity < 0.0 || nv_init_fidelity > 1.0) throw ConfigError("noise: NV init fidelity outside [0, 1]");
  if (dead_time < 0.0) throw ConfigError("noise: negative dead time");
}

std::vector<CollapseChannel> collapse_channels(const NoiseModel& noise, std::span<const int> dims) {
  noise.validate();
  std::vector<CollapseChannel> out;
  const std::size_t n = std::min(noise.sites.size(), dims.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = noise.sites[k];
    double gamma1 = std::isfinite(s.t1) ? 1.0 / s.t1 : 0.0;
    double gamma2 = std::isfinite(s.t2) ? 1.0 / s.t2 : 0.0;
    if (gamma1 > 0.0) {
      out.push_back({embed(ops::sigma_plus(), k, dims), 0.5 * gamma1});
      out.push_back({embed(ops::sigma_minus(), k, dims), 0.5 * gamma1});
    }
    const double pure_dephasing = gamma2 - 0.5 * gamma1;
    if (pure_dephasing > 0.0) out.push_back({embed(ops::pauli_z(), k, dims), 0.5 * pure_dephasing});
  }
  return out;
}

void TimeSeries::write_csv(std::ostream& os) const {
  os << "t_us,pol_nv,pol_e";
  for (std::size_t k = 0; k < nuclei.size(); ++k) os << ",pol_n" << (k + 1);
  os << '\n';
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << format_number(times[i]) << ',' << format_number(nv[i]) << ',' << format_number(electron[i]);
    for (const auto& col : nuclei) os << ',' << format_number(col[i]);
    os << '\n';
  }
}

Matrix nv_reset_state(double fidelity, ResetMixture mixture) {
  if (fidelity < 0.0 || fidelity > 1.0) throw ConfigError("NV reset fidelity outside [0, 1]");
  // Index 0 is |1>, index 1 is |0>.
  Matrix m = Matrix::Zero(2, 2);
  if (mixture == ResetMixture::Mixed) {
    m(0, 0) = 0.5 * (1.0 - fidelity);
    m(1, 1) = 0.5 * (1.0 + fidelity);
  } else {
    m(0, 0) = 1.0 - fidelity;
    m(1, 1) = fidelity;
  }
  return m;
}

DensityMatrix reinitialize_nv(const DensityMatrix& rho, double fidelity, ResetMixture mixture) {
  Matrix rest = trace_out_leading(rho.matrix(), 2);
  return DensityMatrix::trusted(kron(nv_reset_state(fidelity, mixture), rest));
}

DensityMatrix thermal_initial_state(const SpinRegister& reg) {
  const Eigen::Index rest = reg.dim() / 2;
  Matrix r = Matrix::Identity(rest, rest) / static_cast<double>(rest);
  return DensityMatrix(kron(nv_reset_state(1.0), r));
}

namespace {

// Drive-only generator for instantaneous rotations on the full register.
Matrix instant_propagator(const PulseSegment& seg, const SpinRegister& reg) {
  SpinRegister bare;
  bare.couplings.nuclei.assign(reg.nuclei_count(), SecularCoupling{});
  DriveSetting d{seg.nv, seg.electron};
  d.nv.rabi = seg.nv_angle;
  d.electron.rabi = seg.electron_angle;
  d.nv.detuning = 0.0;
  d.electron.detuning = 0.0;
  return propagator(build_rotating_hamiltonian(bare, d, true), 1.0);
}

void check_schedule(const PulseSchedule& schedule) {
  if (schedule.sequence_count() == 0 || schedule.segments.empty()) {
    throw ConfigError("dynamics: schedule must contain at least one block");
  }
  if (schedule.segments.size() % schedule.sequence_count() != 0) {
    throw ConfigError("dynamics: schedule is not periodic in its sequences");
  }
}

void check_dimension(const SpinRegister& reg) {
  if (reg.dim() > kUnitaryDimensionCap) {
    std::ostringstream msg;
    msg << "register dimension " << reg.dim() << " exceeds the cap of " << kUnitaryDimensionCap
        << "; use the analytics module (cooling rates and exponential buildup) for larger spin baths";
    throw DimensionError(msg.str());
  }
}

std::size_t strobe_count(double total_time, double tau) {
  if (total_time < 0.0) throw ConfigError("dynamics: negative total time");
  return static_cast<std::size_t>(std::floor(total_time / tau + 1e-9));
}

void record(TimeSeries& ts, double t, const Matrix& rho, const RegisterObservables& obs) {
  ts.times.push_back(t);
  ts.nv.push_back(expectation(rho, obs.nv));
  ts.electron.push_back(expectation(rho, obs.electron));
  for (std::size_t k = 0; k < obs.nuclei.size(); ++k) ts.nuclei[k].push_back(expectation(rho, obs.nuclei[k]));
}

}  // namespace

Matrix sequence_propagator(const PulseSchedule& schedule, const SpinRegister& reg) {
  check_schedule(schedule);
  const std::size_t per_seq = schedule.segments_per_sequence();
  Matrix u = Matrix::Identity(reg.dim(), reg.dim());
  for (std::size_t k = 0; k < per_seq; ++k) {
    const auto& seg = schedule.segments[k];
    if (seg.kind == SegmentKind::Instant) {
      u = instant_propagator(seg, reg) * u;
    } else if (seg.duration > 0.0) {
      const Matrix h = build_rotating_hamiltonian(reg, DriveSetting{seg.nv, seg.electron}, true);
      u = propagator(h, seg.duration) * u;
    }
  }
  return u;
}

TimeSeries run_unitary(const PulseSchedule& schedule, const SpinRegister& reg, const DensityMatrix& initial,
                       const ReinitPolicy& policy, double total_time) {
  check_dimension(reg);
  if (initial.dim() != reg.dim()) throw DimensionError("run_unitary: initial state dimension mismatch");
  if (policy.mode == ResetMode::DeadTime) {
    throw ConfigError("run_unitary: dead-time resets need a noise model; use run_lindblad");
  }
  const Matrix u = sequence_propagator(schedule, reg);
  const Matrix ud = u.adjoint();
  const RegisterObservables obs(reg);
  const std::size_t steps = strobe_count(total_time, schedule.tau);
  const std::size_t reset_every = 2 * static_cast<std::size_t>(std::max(policy.blocks_per_cycle, 0));

  TimeSeries ts;
  ts.nuclei.resize(reg.nuclei_count());
  Matrix rho = initial.matrix();
  record(ts, 0.0, rho, obs);
  for (std::size_t s = 1; s <= steps; ++s) {
    rho = u * rho * ud;
    record(ts, s * schedule.tau, rho, obs);
    if (reset_every > 0 && s % reset_every == 0) {
      rho = kron(nv_reset_state(1.0), trace_out_leading(rho, 2));
    }
  }
  return ts;
}

TimeSeries run_lindblad(const PulseSchedule& schedule, const SpinRegister& reg, const NoiseModel& noise,
                        const DensityMatrix& initial, const ReinitPolicy& policy, double total_time) {
  check_dimension(reg);
  check_schedule(schedule);
  if (initial.dim() != reg.dim()) throw DimensionError("run_lindblad: initial state dimension mismatch");
  const auto dims = reg.dims();
  const auto channels = collapse_channels(noise, dims);
  const std::size_t per_seq = schedule.segments_per_sequence();

  struct Stage {
    bool instant = false;
    Matrix unitary;
    std::optional<LindbladIntegrator> integrator;
    double dt = 0.0;
    std::size_t steps = 0;
  };
  std::vector<Stage> stages;
  for (std::size_t k = 0; k < per_seq; ++k) {
    const auto& seg = schedule.segments[k];
    Stage st;
    if (seg.kind == SegmentKind::Instant) {
      st.instant = true;
      st.unitary = instant_propagator(seg, reg);
    } else {
      if (!(seg.duration > 0.0)) continue;
      st.integrator.emplace(build_rotating_hamiltonian(reg, DriveSetting{seg.nv, seg.electron}, true), channels);
      st.steps = static_cast<std::size_t>(std::ceil(seg.duration / st.integrator->max_step() - 1e-9));
      st.steps = std::max<std::size_t>(st.steps, 1);
      st.dt = seg.duration / static_cast<double>(st.steps);
    }
    stages.push_back(std::move(st));
  }

  std::optional<LindbladIntegrator> dead;
  std::size_t dead_steps = 0;
  double dead_dt = 0.0;
  if (policy.mode == ResetMode::DeadTime && noise.dead_time > 0.0) {
    dead.emplace(build_rotating_hamiltonian(reg, DriveSetting{}, true), channels);
    dead_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(noise.dead_time / dead->max_step())));
    dead_dt = noise.dead_time / static_cast<double>(dead_steps);
  }

  const RegisterObservables obs(reg);
  const std::size_t steps = strobe_count(total_time, schedule.tau);
  const std::size_t reset_every = 2 * static_cast<std::size_t>(std::max(policy.blocks_per_cycle, 0));

  TimeSeries ts;
  ts.nuclei.resize(reg.nuclei_count());
  Matrix rho = initial.matrix();
  double t = 0.0;
  record(ts, t, rho, obs);
  for (std::size_t s = 1; s <= steps; ++s) {
    for (const auto& st : stages) {
      if (st.instant) {
        rho = st.unitary * rho * st.unitary.adjoint();
      } else {
        st.integrator->advance(rho, st.dt, st.steps);
      }
    }
    t += schedule.tau;
    record(ts, t, rho, obs);
    if (reset_every > 0 && s % reset_every == 0) {
      rho = kron(nv_reset_state(noise.nv_init_fidelity, noise.mixture), trace_out_leading(rho, 2));
      if (dead) {
        dead->advance(rho, dead_dt, dead_steps);
        t += noise.dead_time;
      }
    }
  }
  return ts;
}

Extremum strobe_extremum(std::span<const double> times, std::span<const double> values, double horizon) {
  if (times.size() != values.size()) throw DimensionError("strobe_extremum: length mismatch");
  std::size_t n = 0;
  while (n < times.size() && times[n] <= horizon + 1e-12) ++n;
  if (n == 0) return {};
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(values[i]) > std::abs(values[best])) best = i;
  }
  Extremum e{std::abs(values[best]), times[best]};
  if (best > 0 && best + 1 < n) {
    const double y0 = std::abs(values[best - 1]);
    const double y1 = std::abs(values[best]);
    const double y2 = std::abs(values[best + 1]);
    const double curv = y0 - 2.0 * y1 + y2;
    if (curv < 0.0) {
      const double d = 0.5 * (y0 - y2) / curv;
      const double h = times[best + 1] - times[best];
      e.value = y1 - 0.25 * (y0 - y2) * d;
      e.time = times[best] + d * h;
    }
  }
  return e;
}

Extremum robustness_point(const RobustnessBase& base, double detuning_nv, double rabi_error) {
  const auto errors = ControlErrors::shared_rabi(detuning_nv, base.detuning_e, rabi_error);
  const PulseSchedule s = build_schedule(base.tau, base.omega, 1, errors, false);
  const TimeSeries ts = run_unitary(s, base.reg, thermal_initial_state(base.reg), ReinitPolicy{}, base.horizon);
  const std::vector<double>* col = nullptr;
  if (base.observed_site == 0) {
    col = &ts.nv;
  } else if (base.observed_site == 1) {
    col = &ts.electron;
  } else {
    const std::size_t k = static_cast<std::size_t>(base.observed_site - 2);
    if (k >= ts.nuclei.size()) throw DimensionError("robustness: observed site outside register");
    col = &ts.nuclei[k];
  }
  return strobe_extremum(ts.times, *col, base.horizon);
}

RobustnessGrid robustness_sweep(const RobustnessBase& base, std::span<const double> detuning_nv,
                                std::span<const double> rabi_error, unsigned workers) {
  RobustnessGrid g;
  g.detuning_nv.assign(detuning_nv.begin(), detuning_nv.end());
  g.rabi_error.assign(rabi_error.begin(), rabi_error.end());
  const std::size_t rows = detuning_nv.size(), cols = rabi_error.size();
  g.max_polarization.assign(rows, std::vector<double>(cols, 0.0));
  g.extremum_time.assign(rows, std::vector<double>(cols, 0.0));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(std::max(1u, workers));
  auto work = [&](unsigned id) {
    try {
      for (std::size_t idx = next++; idx < rows * cols; idx = next++) {
        const std::size_t i = idx / cols, j = idx % cols;
        const Extremum e = robustness_point(base, detuning_nv[i], rabi_error[j]);
        g.max_polarization[i][j] = e.value;
        g.extremum_time[i][j] = e.time;
      }
    } catch (...) {
      errors[id] = std::current_exception();
      next = rows * cols;
    }
  };
  const unsigned n = std::max(1u, workers);
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return g;
}

void RobustnessGrid::write_csv(std::ostream& os) const {
  os << "detuning_nv_mhz";
  for (double c : rabi_error) os << ',' << format_number(to_linear(c));
  os << '\n';
  for (std::size_t i = 0; i < detuning_nv.size(); ++i) {
    os << format_number(to_linear(detuning_nv[i]));
    for (double v : max_polarization[i]) os << ',' << format_number(v);
    os << '\n';
  }
}

}  // namespace nvdnp
