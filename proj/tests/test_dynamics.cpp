#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nvdnp/analytics.hpp"
#include "nvdnp/errors.hpp"
#include "nvdnp/dynamics.hpp"

using namespace nvdnp;

namespace {

SpinRegister pair_register(double a_zz_mhz) {
  SpinRegister reg;
  reg.couplings.a_zz = to_angular(a_zz_mhz);
  return reg;
}

double max_two_spin_deviation(double tau, double total) {
  const SpinRegister reg = pair_register(0.4);
  const PulseSchedule s = build_schedule(tau, to_angular(20.0), 1, {}, true);
  const TimeSeries ts = run_unitary(s, reg, thermal_initial_state(reg), {}, total);
  double dev = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    dev = std::max(dev, std::abs(ts.electron[i] - pol_two_spin(reg.couplings.a_zz, ts.times[i])));
  }
  return dev;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("NV reset states") {
  const Matrix mixed = nv_reset_state(0.8);
  CHECK(mixed(1, 1).real() == doctest::Approx(0.9));
  CHECK(mixed(0, 0).real() == doctest::Approx(0.1));
  const Matrix flipped = nv_reset_state(0.8, ResetMixture::Flipped);
  CHECK(flipped(1, 1).real() == doctest::Approx(0.8));
  CHECK(max_abs(nv_reset_state(1.0) - Matrix(Eigen::Vector2cd(0.0, 1.0).asDiagonal())) < 1e-15);
}

TEST_CASE("reinitialization produces a product state and keeps the rest") {
  // NV-electron Bell-like state (|1 down> + |0 up>)/sqrt2 plus some mixture.
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi(1) = 1.0 / std::sqrt(2.0);
  psi(2) = 1.0 / std::sqrt(2.0);
  const Matrix rho_m = 0.8 * psi * psi.adjoint() + 0.05 * ops::identity(4);
  const DensityMatrix rho(rho_m);
  const Matrix rest_before = trace_out_leading(rho.matrix(), 2);
  const DensityMatrix out = reinitialize_nv(rho, 1.0);
  const Matrix rest_after = trace_out_leading(out.matrix(), 2);
  CHECK(max_abs(rest_before - rest_after) < 1e-14);
  CHECK(max_abs(out.matrix() - kron(nv_reset_state(1.0), rest_after)) < 1e-14);
  const DensityMatrix out8 = reinitialize_nv(rho, 0.8);
  CHECK(max_abs(out8.matrix() - kron(nv_reset_state(0.8), rest_after)) < 1e-14);
}

TEST_CASE("collapse channels give T1 and T2 decay") {
  NoiseModel noise;
  noise.sites = {{kNever, kNever}, {30.0, 1.0}};
  const std::vector<int> dims{2, 2};
  const auto ch = collapse_channels(noise, dims);
  CHECK(ch.size() == 3);
  double plus = 0.0, z = 0.0;
  for (const auto& c : ch) {
    if (max_abs(c.op - embed(ops::pauli_z(), 1, dims)) < 1e-15) z = c.rate;
    if (max_abs(c.op - embed(ops::sigma_plus(), 1, dims)) < 1e-15) plus = c.rate;
  }
  CHECK(plus == doctest::Approx(1.0 / 60.0));
  // Coherence decay 2 * z + (plus + minus)/2 = 1/T2.
  CHECK(2.0 * z + 1.0 / 60.0 == doctest::Approx(1.0));
  noise.sites[1] = {1.0, 3.0};
  CHECK_THROWS_AS(noise.validate(), ConfigError);
}

TEST_CASE("two-spin strobes follow -sin^2(A t/4)") {
  CHECK(max_two_spin_deviation(0.5, 5.0) < 1e-10);
  const SpinRegister reg = pair_register(0.4);
  const PulseSchedule s = build_schedule(0.5, to_angular(20.0), 1, {}, true);
  const TimeSeries ts = run_unitary(s, reg, thermal_initial_state(reg), {}, 2.5);
  CHECK(ts.times.front() == 0.0);
  CHECK(ts.times.back() == doctest::Approx(2.5));
  CHECK(ts.electron.back() == doctest::Approx(-1.0).epsilon(1e-9));
  // Only the electron-up half of the mixture exchanges, leaving the NV unpolarized.
  CHECK(std::abs(ts.nv.back()) < 1e-9);
}

TEST_CASE("finite pulses slow the transfer by the attenuation factor") {
  const SpinRegister reg = pair_register(0.4);
  const double tau = 0.9033, omega = to_angular(20.0);
  const PulseSchedule s = build_schedule(tau, omega, 1);
  const double att = finite_pulse_attenuation(omega, tau);
  const TimeSeries ts = run_unitary(s, reg, thermal_initial_state(reg), {}, 3.0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(ts.electron[i] == doctest::Approx(pol_two_spin(reg.couplings.a_zz, ts.times[i], att)).epsilon(0.02));
  }
}

TEST_CASE("mediated transfer reaches the nucleus with the electron returned") {
  SpinRegister reg = pair_register(0.1);
  const double alpha = alpha_coefficient(3);
  reg.nuclear_larmor = proton_gamma() * 390.0;
  reg.couplings.nuclei = {SecularCoupling::transverse(reg.couplings.a_zz / alpha)};
  const double tau = resonance_spacing(3, proton_gamma(), 390.0);
  const PulseSchedule s = build_schedule(tau, to_angular(20.0), 1, {}, true);
  const double t_star = 4.0 * kPi / (std::sqrt(2.0) * reg.couplings.a_zz);
  const TimeSeries ts = run_unitary(s, reg, thermal_initial_state(reg), {}, 1.3 * t_star);
  std::size_t best = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (std::abs(ts.nuclei[0][i]) > std::abs(ts.nuclei[0][best])) best = i;
  }
  CHECK(std::abs(ts.nuclei[0][best]) > 0.9);
  CHECK(std::abs(ts.electron[best]) < 0.05);
}

TEST_CASE("strobed error vanishes quadratically in A tau") {
  const double d1 = max_two_spin_deviation(0.5, 2.5);
  const double d2 = max_two_spin_deviation(0.25, 2.5);
  CHECK(d1 < 1e-9);
  CHECK(d2 <= d1 / 4.0 + 1e-12);
}

TEST_CASE("periodic resets act only at cycle boundaries") {
  SpinRegister reg = pair_register(0.9);
  reg.nuclear_larmor = proton_gamma() * 430.0;
  reg.couplings.nuclei = {SecularCoupling::transverse(to_angular(1.0))};
  const double tau = resonance_spacing(3, proton_gamma(), 430.0);
  const PulseSchedule s = build_schedule(tau, to_angular(20.0), 1, {}, true);
  const double total = 16 * 8 * tau;
  const TimeSeries with = run_unitary(s, reg, thermal_initial_state(reg), {4, ResetMode::Instantaneous}, total);
  const TimeSeries without = run_unitary(s, reg, thermal_initial_state(reg), {}, total);
  REQUIRE(with.size() == without.size());
  CHECK(with.nv.front() == doctest::Approx(-1.0));
  // Identical up to the first reset, which follows the strobe at 8 tau.
  for (std::size_t i = 0; i <= 8; ++i) CHECK(with.nuclei[0][i] == doctest::Approx(without.nuclei[0][i]));
  double diff = 0.0;
  for (std::size_t i = 9; i < with.size(); ++i) diff = std::max(diff, std::abs(with.nv[i] - without.nv[i]));
  CHECK(diff > 0.05);
  for (std::size_t i = 0; i < with.size(); ++i) {
    CHECK(std::abs(with.nuclei[0][i]) <= 1.0 + 1e-9);
    CHECK(std::abs(with.nv[i]) <= 1.0 + 1e-9);
  }
}

TEST_CASE("unitary engine enforces the dimension cap and dead-time resets") {
  SpinRegister reg = pair_register(0.9);
  reg.couplings.nuclei.assign(4, SecularCoupling::transverse(1.0));
  const PulseSchedule s = build_schedule(0.8, to_angular(20.0), 1, {}, true);
  CHECK_THROWS_AS(run_unitary(s, reg, thermal_initial_state(reg), {}, 1.0), DimensionError);
  SpinRegister small = pair_register(0.9);
  CHECK_THROWS_AS(run_unitary(s, small, thermal_initial_state(small), {1, ResetMode::DeadTime}, 2.0), ConfigError);
}

TEST_CASE("noiseless master equation matches the unitary engine") {
  SpinRegister reg = pair_register(0.9);
  reg.nuclear_larmor = proton_gamma() * 430.0;
  reg.couplings.nuclei = {SecularCoupling::transverse(to_angular(1.0))};
  const double tau = resonance_spacing(3, proton_gamma(), 430.0);
  const PulseSchedule s = build_schedule(tau, to_angular(20.0), 1);
  const ReinitPolicy policy{3, ResetMode::Instantaneous};
  const double total = 8.0 * tau;
  const TimeSeries u = run_unitary(s, reg, thermal_initial_state(reg), policy, total);
  NoiseModel noise;
  const TimeSeries l = run_lindblad(s, reg, noise, thermal_initial_state(reg), policy, total);
  REQUIRE(u.size() == l.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    CHECK(std::abs(u.electron[i] - l.electron[i]) < 1e-4);
    CHECK(std::abs(u.nuclei[0][i] - l.nuclei[0][i]) < 1e-4);
  }
}

TEST_CASE("electron dephasing damps the two-spin exchange") {
  const SpinRegister reg = pair_register(0.4);
  const PulseSchedule s = build_schedule(0.5, to_angular(20.0), 1, {}, true);
  NoiseModel noise;
  noise.sites = {{}, {kNever, 1.0}};
  const TimeSeries ts = run_lindblad(s, reg, noise, thermal_initial_state(reg), {}, 2.5);
  // Damped Rabi oscillation of the exchange pair with coherence decay 1/T2:
  // w = e^{-g t/2}(cos wt + g/(2w) sin wt), P = -(1 - w)/2 at Rabi frequency A/2.
  const double g = 1.0, om = reg.couplings.a_zz / 2.0, t = 2.5;
  const double w = std::sqrt(om * om - g * g / 4.0);
  const double oracle = -(1.0 - std::exp(-g * t / 2.0) * (std::cos(w * t) + g / (2.0 * w) * std::sin(w * t))) / 2.0;
  const double p = ts.electron.back();
  CHECK(std::abs(p) < 1.0);
  CHECK(std::abs(p) < 0.95);
  CHECK(p == doctest::Approx(oracle).epsilon(0.25));
}

TEST_CASE("strobe extremum refines the peak") {
  std::vector<double> t, y;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(0.1 * i);
    y.push_back(-std::sin(0.7 * t.back()) * std::sin(0.7 * t.back()));
  }
  const Extremum e = strobe_extremum(t, y, 4.0);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(e.time == doctest::Approx(kPi / 1.4).epsilon(1e-3));
  const Extremum early = strobe_extremum(t, y, 1.0);
  CHECK(early.time <= 1.0 + 1e-12);
}

TEST_CASE("robustness point without errors matches the ideal extremum") {
  RobustnessBase base;
  base.reg = pair_register(0.4);
  base.tau = 0.5;
  base.omega = to_angular(20.0);
  const double att = finite_pulse_attenuation(base.omega, base.tau);
  const double ideal = kTwoPi / (att * base.reg.couplings.a_zz);
  base.horizon = 1.5 * ideal;
  const Extremum e = robustness_point(base, 0.0, 0.0);
  CHECK(e.value == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(e.time == doctest::Approx(ideal).epsilon(0.02));
}

TEST_CASE("parallel sweep matches the serial sweep") {
  RobustnessBase base;
  base.reg = pair_register(0.4);
  base.tau = 0.5;
  base.omega = to_angular(20.0);
  base.horizon = 4.0;
  const std::vector<double> det{-2.0, 0.0, 3.0}, err{-1.0, 1.5};
  const RobustnessGrid a = robustness_sweep(base, det, err, 1);
  const RobustnessGrid b = robustness_sweep(base, det, err, 3);
  CHECK(a.max_polarization == b.max_polarization);
  CHECK(a.extremum_time == b.extremum_time);
  std::ostringstream sa, sb;
  a.write_csv(sa);
  b.write_csv(sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("time series CSV layout") {
  TimeSeries ts;
  ts.times = {0.0, 0.5};
  ts.nv = {-1.0, -0.9};
  ts.electron = {0.0, -0.1};
  ts.nuclei = {{0.0, 0.01}};
  std::ostringstream os;
  ts.write_csv(os);
  CHECK(os.str().rfind("t_us,pol_nv,pol_e,pol_n1\n", 0) == 0);
}

}  // TEST_SUITE
