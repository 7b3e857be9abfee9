#include "nvdnp/analytics.hpp"

#include <cmath>
#include <sstream>

#include "nvdnp/errors.hpp"
#include "nvdnp/physical_model.hpp"

namespace nvdnp {

namespace {

constexpr double kPerMicrosecondToPerSecond = 1e6;

double sq(double x) { return x * x; }

}  // namespace

double finite_pulse_attenuation(double omega, double tau) {
  if (!(omega * tau > kPi)) {
    std::ostringstream msg;
    msg << "finite-pulse correction invalid for omega*tau = " << omega * tau << " <= pi";
    throw ConfigError(msg.str());
  }
  return 1.0 - kPi / (omega * tau);
}

double pol_two_spin(double a_zz, double t, double attenuation) {
  return -sq(std::sin(attenuation * a_zz * t / 4.0));
}

double alpha_coefficient(int n) {
  switch (n) {
    case 1: return 0.37;
    case 3: return 0.72;
    default: break;
  }
  std::ostringstream msg;
  msg << "no filter constant known for harmonic n = " << n << " (only n = 1 and n = 3 are supported)";
  throw UnsupportedHarmonicError(msg.str());
}

ThreeSpinPolarization pol_three_spin(double a_zz, double b_perp, double alpha, double t) {
  const double a2 = sq(a_zz);
  const double b2 = sq(alpha * b_perp);
  const double w2 = a2 + b2;
  if (w2 == 0.0) return {};
  const double w = std::sqrt(w2);
  return {4.0 * a2 * b2 / sq(w2) * std::pow(std::sin(w * t / 8.0), 4), -a2 / w2 * sq(std::sin(w * t / 4.0))};
}

TransferPrediction predict_transfer(double a_zz, double b_perp, double alpha, std::span<const double> times) {
  TransferPrediction p;
  p.a_zz = a_zz;
  p.b_perp = b_perp;
  p.alpha = alpha;
  for (double t : times) {
    const auto v = pol_three_spin(a_zz, b_perp, alpha, t);
    p.times.push_back(t);
    p.nuclear.push_back(v.nuclear);
    p.electron.push_back(v.electron);
  }
  return p;
}

double optimal_nucleus_distance(double r_nv_e, double alpha, double gamma_n, double gamma_e) {
  if (!(r_nv_e > 0.0)) throw ConfigError("optimal nucleus distance needs a positive NV-electron distance");
  return std::cbrt(3.0 * alpha * std::abs(gamma_n) / (4.0 * std::abs(gamma_e))) * r_nv_e;
}

double hemisphere_spin_count(double radius, double density) {
  return 2.0 / 3.0 * kPi * radius * radius * radius * density;
}

double cooling_rate_discrete(std::size_t i, double cycle, double a_zz, std::span<const double> b_perp,
                             double alpha) {
  if (!(cycle > 0.0)) throw ConfigError("cooling rate needs a positive cycle duration");
  if (i >= b_perp.size()) throw DimensionError("cooling rate: nucleus index outside coupling list");
  const double b0 = aggregate_b0(b_perp);
  const double a2 = sq(a_zz);
  const double w2 = a2 + sq(alpha * b0);
  if (w2 == 0.0) return 0.0;
  const double w = std::sqrt(w2);
  return 4.0 * a2 * sq(alpha * b_perp[i]) / (cycle * sq(w2)) * std::pow(std::sin(w * cycle / 8.0), 4);
}

double buildup_exponential(double p0, double rate, double t) {
  if (rate < 0.0) throw ConfigError("buildup rate must be non-negative");
  return p0 + (1.0 - p0) * (1.0 - std::exp(-rate * t));
}

const char* protocol_name(Protocol p) { return p == Protocol::Mediated ? "mediated" : "direct"; }

double CoolingRateSpec::envelope() const {
  const double gamma = protocol == Protocol::Mediated ? gamma2_e + gamma2_nv : gamma2_nv;
  return fidelity * std::exp(-gamma * cycle) / (cycle + dead_time);
}

double cooling_rate_field(double b_perp, double a_zz, double b0, const CoolingRateSpec& spec) {
  const double a2 = sq(a_zz);
  const double w2 = a2 + sq(spec.alpha * b0);
  if (w2 == 0.0) return 0.0;
  const double v = 2.0 * a2 * sq(spec.alpha * b_perp) / sq(w2) * std::pow(std::sin(std::sqrt(w2) * spec.cycle / 8.0), 4);
  return spec.envelope() * v * kPerMicrosecondToPerSecond;
}

double cooling_rate_direct(double b_perp, double b0, const CoolingRateSpec& spec) {
  if (b0 == 0.0) return 0.0;
  const double weight = sq(b_perp / b0);
  return spec.envelope() * weight * sq(std::sin(spec.alpha * b0 * spec.cycle / 4.0)) * kPerMicrosecondToPerSecond;
}

double cycle_objective(const CycleSearch& s, double cycle) {
  if (s.protocol == Protocol::Mediated) {
    const double w = std::sqrt(sq(s.a_zz) + sq(s.alpha * s.b0));
    return std::exp(-(s.gamma2_e + s.gamma2_nv) * cycle) * std::pow(std::sin(w * cycle / 8.0), 4) /
           (cycle + s.dead_time);
  }
  return std::exp(-s.gamma2_nv * cycle) * sq(std::sin(s.alpha * s.b0 * cycle / 4.0)) / (cycle + s.dead_time);
}

CycleOptimum optimal_cycle_duration(const CycleSearch& s) {
  if (!(s.tau > 0.0)) throw ConfigError("cycle search needs a positive tau");
  if (s.max_blocks < 1) throw ConfigError("cycle search needs max_blocks >= 1");
  CycleOptimum out;
  out.objective = -1.0;
  for (int n = 1; n <= s.max_blocks; ++n) {
    const double t = 2.0 * n * s.tau;
    const double f = cycle_objective(s, t);
    out.objective_by_blocks.push_back(f);
    if (f > out.objective) {
      out.objective = f;
      out.blocks = n;
      out.cycle = t;
    }
  }

  // Dense scan of the continuous objective for diagnostics.
  const double t_max = 2.0 * s.max_blocks * s.tau;
  const int samples = 200000;
  out.continuous_objective = -1.0;
  for (int k = 1; k <= samples; ++k) {
    const double t = t_max * k / samples;
    const double f = cycle_objective(s, t);
    if (f > out.continuous_objective) {
      out.continuous_objective = f;
      out.continuous_cycle = t;
    }
  }
  return out;
}

double spin_diffusion_constant(double density, double gamma_n) {
  if (!(density > 0.0)) throw ConfigError("spin diffusion constant needs a positive density");
  const double prefactor = PhysicalConstants::dipolar_prefactor(gamma_n, gamma_n) * kPerMicrosecondToPerSecond;
  return 0.22 * prefactor * std::cbrt(density);
}

}  // namespace nvdnp
