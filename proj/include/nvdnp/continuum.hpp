#pragma once

// Continuum hyperpolarization model: B0 integrals over the sample half-space,
// cooling-rate fields and the reaction-diffusion equation
//   dP/dt = u(R)(1 - P) - Gamma1 P + D lap P
// on a uniform cell-centred grid over z >= 0.

#include <ostream>
#include <vector>

#include "nvdnp/analytics.hpp"
#include "nvdnp/physical_model.hpp"

namespace nvdnp {

struct SampleGrid {
  double spacing = 1.0;        // nm
  int nx = 120, ny = 120, nz = 60;
  double x0 = -60.0, y0 = -60.0;  // lower lateral corner, nm; z starts at 0
  double density = 66.0;       // nm^-3
  double r_min = 0.2;          // nm, exclusion radius around the electron
  Vec3 exclusion_center = Vec3::Zero();
  int max_refinement = 6;      // adaptive subdivision depth near sources

  // Box of n cells laterally centred on `electron`, which is also the exclusion centre.
  static SampleGrid centered(const Vec3& electron, double spacing, int nx, int ny, int nz, double density,
                             double r_min);

  std::size_t size() const { return std::size_t(nx) * std::size_t(ny) * std::size_t(nz); }
  std::size_t index(int i, int j, int k) const { return (std::size_t(k) * ny + j) * nx + i; }
  Vec3 center(int i, int j, int k) const {
    return {x0 + (i + 0.5) * spacing, y0 + (j + 0.5) * spacing, (k + 0.5) * spacing};
  }
  double cell_volume() const { return spacing * spacing * spacing; }
  void validate() const;
};

// Cell averages of B_perp(R)^2 for a point source at `source` with the given
// dipolar prefactor; sub-volumes within r_min of the exclusion centre count as
// empty.
std::vector<double> cell_coupling_squared(const SampleGrid& grid, const Vec3& source, const Vec3& axis,
                                          double prefactor);

// sqrt(rho sum_cells <B_perp^2> h^3).
double continuum_b0(const SampleGrid& grid, const Vec3& source, const Vec3& axis, double prefactor);

// Closed form for an unbounded hemisphere outside r_min:
// B0^2 = rho prefactor^2 (4 pi / 5) / r_min^3.
double hemisphere_b0(double density, double prefactor, double r_min);

struct CoolingRateField {
  std::vector<double> values;  // 1/s
  Protocol protocol = Protocol::Mediated;
  double cycle = 0.0;          // us
  double max() const;
};

struct RateInputs {
  SystemGeometry geometry;
  PhysicalConstants constants = PhysicalConstants::standard();
  CoolingRateSpec spec;
};

struct RateEvaluation {
  CoolingRateField field;
  double b0 = 0.0;
  double a_zz = 0.0;
};

// Mediated: source is the electron. Direct: source is the NV.
RateEvaluation evaluate_rate_field(const SampleGrid& grid, const RateInputs& inputs);

struct PolarizationGrid {
  std::vector<double> values;
  double time = 0.0;  // s
};

struct PdeBoundary {
  bool absorbing_far = true;  // P = 0 on the lateral and top faces; zero flux otherwise
};

class PdeStepper {
 public:
  PdeStepper(const SampleGrid& grid, const std::vector<double>& rate, double gamma1, double diffusion, double dt,
             PdeBoundary boundary = {});

  // One split step; returns max |P_new - P_old| when `measure` is set, else 0.
  double step(std::vector<double>& p, bool measure = true);
  double dt() const { return dt_; }
  static double max_stable_dt(double spacing, double diffusion);

 private:
  SampleGrid grid_;
  std::vector<double> decay_;
  std::vector<double> equilibrium_;
  std::vector<double> scratch_;
  std::vector<double> zero_row_;
  double gamma1_;
  double coefficient_;
  double dt_;
  PdeBoundary boundary_;
};

PolarizationGrid step_pde(const SampleGrid& grid, const PolarizationGrid& p, const CoolingRateField& u,
                          double gamma1, double diffusion, double dt, PdeBoundary boundary = {});

struct ConvergenceRecord {
  double converged_time = 0.0;  // s
  std::size_t steps = 0;
  double residual = 0.0;        // max |dP/dt| at the end, 1/s
  double dt = 0.0;
  std::vector<double> times;    // s
  std::vector<double> count;    // N(t)
};

struct SteadyStateOptions {
  double tolerance = 1e-5;      // stop when max |dP/dt| < tolerance * Gamma1
  double record_interval = 0.01;  // s
  double dt_fraction = 0.95;    // of the stability limit
};

std::pair<PolarizationGrid, ConvergenceRecord> solve_steady_state(const SampleGrid& grid,
                                                                  const CoolingRateField& u, double gamma1,
                                                                  double diffusion,
                                                                  const SteadyStateOptions& options = {});

double polarized_spin_count(const SampleGrid& grid, const PolarizationGrid& p);

// Radius about the polarization centroid enclosing half of sum P.
double half_mass_radius(const SampleGrid& grid, const PolarizationGrid& p);

void write_slice_xy(std::ostream& os, const SampleGrid& grid, const PolarizationGrid& p, int k = 0);
void write_slice_xz(std::ostream& os, const SampleGrid& grid, const PolarizationGrid& p, double y = 0.0);
void write_map(std::ostream& os, const SampleGrid& grid, const PolarizationGrid& p);

struct ContinuumProblem {
  SystemGeometry geometry;  // electron_position used by the mediated protocol
  PhysicalConstants constants = PhysicalConstants::standard();
  SampleGrid grid;
  int harmonic_mediated = 1;
  int harmonic_direct = 3;
  double alpha_mediated = 0.37;
  double alpha_direct = 0.72;
  double fidelity = 0.8;
  double t2_e = 1.0;        // us
  double t2_nv = 10.0;      // us
  double dead_time = 2.0;   // us
  double gamma1 = 1.0;      // 1/s
  double diffusion = 0.0;   // nm^2/s; 0 selects the cubic-lattice estimate
  int max_blocks = 64;
  SteadyStateOptions steady;
};

struct ContinuumResult {
  Protocol protocol = Protocol::Mediated;
  double tau = 0.0;
  CycleOptimum cycle;
  RateEvaluation rates;
  double diffusion = 0.0;
  PolarizationGrid steady;
  ConvergenceRecord convergence;
  double spin_count = 0.0;
  double half_mass_radius = 0.0;
};

double effective_diffusion(const ContinuumProblem& problem);

// Resonance spacing, B0 and the optimal cycle of one protocol; no PDE work.
struct ProtocolPlan {
  Protocol protocol = Protocol::Mediated;
  double tau = 0.0;
  double a_zz = 0.0;
  double b0 = 0.0;
  CycleOptimum cycle;
  CoolingRateSpec spec;
  std::vector<double> cells;  // cell-averaged B_perp^2
};

ProtocolPlan plan_protocol(const ContinuumProblem& problem, Protocol protocol);

// Cycle optimum, rate field, steady state and N for one protocol.
ContinuumResult solve_protocol(const ContinuumProblem& problem, Protocol protocol);

struct T2Point {
  double t2_e = 0.0;
  int blocks = 0;
  double spin_count = 0.0;
};

std::vector<T2Point> t2_sweep(const ContinuumProblem& problem, std::span<const double> t2_values);

}  // namespace nvdnp
