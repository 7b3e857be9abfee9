#pragma once

// Closed-form transfer curves, cooling rates and the cycle-duration search.
// Couplings are angular (rad/us), times in us. Cooling rates of the continuum
// model are returned in 1/s.

#include <span>
#include <vector>

namespace nvdnp {

// 1 - pi/(omega tau); requires omega tau > pi.
double finite_pulse_attenuation(double omega, double tau);

// -sin^2(A_eff t/4) with A_eff = attenuation * A.
double pol_two_spin(double a_zz, double t, double attenuation = 1.0);

// Filter constant of the resonance harmonic; only n = 1 and n = 3 are known.
double alpha_coefficient(int n);

struct ThreeSpinPolarization {
  double nuclear = 0.0;
  double electron = 0.0;
};

// b = alpha * B_perp:
//   P' = 4A^2 b^2/(A^2+b^2)^2 sin^4(sqrt(A^2+b^2) t/8)
//   Pe = -A^2/(A^2+b^2) sin^2(sqrt(A^2+b^2) t/4)
ThreeSpinPolarization pol_three_spin(double a_zz, double b_perp, double alpha, double t);

struct TransferPrediction {
  std::vector<double> times;
  std::vector<double> nuclear;
  std::vector<double> electron;
  double a_zz = 0.0;
  double b_perp = 0.0;
  double alpha = 0.0;
};

TransferPrediction predict_transfer(double a_zz, double b_perp, double alpha, std::span<const double> times);

// (3 alpha |gamma_n| / 4 |gamma_e|)^(1/3) |r|.
double optimal_nucleus_distance(double r_nv_e, double alpha, double gamma_n, double gamma_e);

// Expected spin count in a hemisphere of `radius` at `density`.
double hemisphere_spin_count(double radius, double density);

// Per-cycle cooling rate of nucleus i in 1/us, with B0 = aggregate of all
// couplings in the list (nucleus i included).
double cooling_rate_discrete(std::size_t i, double cycle, double a_zz, std::span<const double> b_perp,
                             double alpha);

// P0 + (1 - P0)(1 - exp(-u t)).
double buildup_exponential(double p0, double rate, double t);

enum class Protocol { Mediated, Direct };

const char* protocol_name(Protocol p);

struct CoolingRateSpec {
  Protocol protocol = Protocol::Mediated;
  double cycle = 0.0;        // T, us
  int blocks = 1;            // T = 2 N tau
  double alpha = 0.37;
  double fidelity = 1.0;
  double gamma2_e = 0.0;     // 1/us
  double gamma2_nv = 0.0;    // 1/us
  double dead_time = 0.0;    // us

  // F exp(-Gamma T)/(T + t_d) in 1/us; Gamma excludes the electron for direct transfer.
  double envelope() const;
};

// Mediated rate in 1/s for a nucleus with transverse coupling b_perp to the electron.
double cooling_rate_field(double b_perp, double a_zz, double b0, const CoolingRateSpec& spec);

// Direct PulsePol rate in 1/s for a nucleus with coupling b_perp to the NV.
double cooling_rate_direct(double b_perp, double b0, const CoolingRateSpec& spec);

struct CycleSearch {
  Protocol protocol = Protocol::Mediated;
  double tau = 0.0;          // us
  double a_zz = 0.0;         // mediated only
  double b0 = 0.0;           // B0 or B0'
  double alpha = 0.37;
  double fidelity = 1.0;
  double gamma2_e = 0.0;
  double gamma2_nv = 0.0;
  double dead_time = 0.0;
  int max_blocks = 64;
};

struct CycleOptimum {
  int blocks = 0;
  double cycle = 0.0;
  double objective = 0.0;
  std::vector<double> objective_by_blocks;  // index N-1
  double continuous_cycle = 0.0;
  double continuous_objective = 0.0;
};

// R-independent part of the rate as a function of T.
double cycle_objective(const CycleSearch& search, double cycle);

CycleOptimum optimal_cycle_duration(const CycleSearch& search);

// 0.22 (mu0 hbar gamma_n^2/4pi) rho^(1/3) in nm^2/s.
double spin_diffusion_constant(double density, double gamma_n);

}  // namespace nvdnp
