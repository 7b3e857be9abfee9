#include "nvdnp/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nvdnp/dynamics.hpp"
#include "nvdnp/errors.hpp"
#include "nvdnp/pulse_sequence.hpp"

namespace nvdnp {

SampleGrid SampleGrid::centered(const Vec3& electron, double spacing, int nx, int ny, int nz, double density,
                                double r_min) {
  SampleGrid g;
  g.spacing = spacing;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.x0 = electron.x() - 0.5 * nx * spacing;
  g.y0 = electron.y() - 0.5 * ny * spacing;
  g.density = density;
  g.r_min = r_min;
  g.exclusion_center = electron;
  return g;
}

void SampleGrid::validate() const {
  if (!(spacing > 0.0)) throw ConfigError("continuum.grid.spacing must be positive");
  if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("continuum.grid extents must be positive");
  if (density < 0.0) throw ConfigError("continuum.density must be non-negative");
  if (!(r_min > 0.0)) {
    throw ConfigError("continuum.r_min must be positive: the B0 integral diverges at the electron site");
  }
  if (max_refinement < 0) throw ConfigError("continuum.grid.max_refinement must be non-negative");
}

namespace {

constexpr double kHalfDiagonal = 0.8660254037844386;  // sqrt(3)/2
constexpr int kExclusionDepth = 8;
constexpr std::size_t kResidualStride = 8;

struct CellIntegrator {
  Vec3 source;
  Vec3 axis;
  double prefactor;
  Vec3 exclusion;
  double r_min;
  int max_depth;

  double point(const Vec3& p) const {
    if ((p - exclusion).norm() < r_min) return 0.0;
    const Vec3 r = p - source;
    if (r.squaredNorm() == 0.0) return 0.0;
    const double b = dipolar_b_perp(r, axis, prefactor);
    return b * b;
  }

  // Mean of B_perp^2 over a cube, subdividing near the source and across the
  // exclusion sphere.
  double average(const Vec3& c, double size, int depth) const {
    const double hd = kHalfDiagonal * size;
    const double d_ex = (c - exclusion).norm();
    if (d_ex + hd <= r_min) return 0.0;
    const bool straddles = d_ex - hd < r_min;
    const double d_src = (c - source).norm();
    const bool near = d_src < 4.0 * size;
    if ((straddles && depth < kExclusionDepth) || (near && depth < max_depth)) {
      double s = 0.0;
      const double q = 0.25 * size;
      for (int a = -1; a <= 1; a += 2)
        for (int b = -1; b <= 1; b += 2)
          for (int e = -1; e <= 1; e += 2) s += average(c + Vec3(a * q, b * q, e * q), 0.5 * size, depth + 1);
      return 0.125 * s;
    }
    return point(c);
  }
};

}  // namespace

std::vector<double> cell_coupling_squared(const SampleGrid& grid, const Vec3& source, const Vec3& axis,
                                          double prefactor) {
  grid.validate();
  const CellIntegrator integ{source, axis.normalized(), prefactor, grid.exclusion_center, grid.r_min,
                             grid.max_refinement};
  std::vector<double> out(grid.size());
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) out[grid.index(i, j, k)] = integ.average(grid.center(i, j, k), grid.spacing, 0);
  return out;
}

namespace {

double b0_from_cells(const SampleGrid& grid, const std::vector<double>& cells) {
  double s = 0.0;
  for (double v : cells) s += v;
  return std::sqrt(grid.density * grid.cell_volume() * s);
}

}  // namespace

double continuum_b0(const SampleGrid& grid, const Vec3& source, const Vec3& axis, double prefactor) {
  return b0_from_cells(grid, cell_coupling_squared(grid, source, axis, prefactor));
}

double hemisphere_b0(double density, double prefactor, double r_min) {
  if (!(r_min > 0.0)) throw ConfigError("hemisphere B0 diverges for r_min <= 0");
  return std::sqrt(density * prefactor * prefactor * (4.0 * kPi / 5.0) / (r_min * r_min * r_min));
}

double CoolingRateField::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

namespace {

Vec3 rate_source(const RateInputs& in) {
  return in.spec.protocol == Protocol::Mediated ? in.geometry.electron_position : in.geometry.nv_position();
}

std::vector<double> rate_cells(const SampleGrid& grid, const RateInputs& in) {
  const double prefactor = PhysicalConstants::dipolar_prefactor(in.constants.gamma_e, in.constants.gamma_n);
  return cell_coupling_squared(grid, rate_source(in), in.geometry.nv_axis, prefactor);
}

RateEvaluation rates_from_cells(const SampleGrid& grid, const std::vector<double>& cells, const RateInputs& in) {
  const SystemGeometry& g = in.geometry;
  const bool mediated = in.spec.protocol == Protocol::Mediated;
  RateEvaluation out;
  out.b0 = b0_from_cells(grid, cells);
  if (mediated) out.a_zz = dipolar_azz(g.electron_position - g.nv_position(), g.nv_axis, in.constants);
  out.field.protocol = in.spec.protocol;
  out.field.cycle = in.spec.cycle;
  out.field.values.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double b = std::sqrt(cells[c]);
    out.field.values[c] = mediated ? cooling_rate_field(b, out.a_zz, out.b0, in.spec)
                                   : cooling_rate_direct(b, out.b0, in.spec);
  }
  return out;
}

}  // namespace

RateEvaluation evaluate_rate_field(const SampleGrid& grid, const RateInputs& in) {
  return rates_from_cells(grid, rate_cells(grid, in), in);
}

// ---------------------------------------------------------------------------
// Reaction-diffusion stepping

double PdeStepper::max_stable_dt(double spacing, double diffusion) {
  if (diffusion <= 0.0) return std::numeric_limits<double>::infinity();
  return spacing * spacing / (6.0 * diffusion);
}

PdeStepper::PdeStepper(const SampleGrid& grid, const std::vector<double>& rate, double gamma1, double diffusion,
                       double dt, PdeBoundary boundary)
    : grid_(grid), gamma1_(gamma1), dt_(dt), boundary_(boundary) {
  if (rate.size() != grid.size()) throw DimensionError("pde: rate field does not match the grid");
  if (gamma1 < 0.0 || diffusion < 0.0) throw ConfigError("pde: Gamma1 and D must be non-negative");
  if (!(dt > 0.0)) throw ConfigError("pde: dt must be positive");
  const double limit = max_stable_dt(grid.spacing, diffusion);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "pde: dt = " << dt << " s exceeds the explicit diffusion limit h^2/(6D) = " << limit << " s";
    throw StabilityError(msg.str(), limit);
  }
  coefficient_ = diffusion * dt / (grid.spacing * grid.spacing);
  decay_.resize(rate.size());
  equilibrium_.resize(rate.size());
  for (std::size_t c = 0; c < rate.size(); ++c) {
    if (rate[c] < 0.0) throw ConfigError("pde: cooling rate must be non-negative");
    const double total = rate[c] + gamma1;
    decay_[c] = std::exp(-total * dt);
    equilibrium_[c] = total > 0.0 ? rate[c] / total : 0.0;
  }
  scratch_.resize(rate.size());
}

double PdeStepper::step(std::vector<double>& p, bool measure) {
  const std::size_t n = p.size();
  double* r = scratch_.data();
  const double* eq = equilibrium_.data();
  const double* dec = decay_.data();
  for (std::size_t c = 0; c < n; ++c) r[c] = eq[c] + (p[c] - eq[c]) * dec[c];

  const int nx = grid_.nx, ny = grid_.ny, nz = grid_.nz;
  const std::size_t row_len = std::size_t(nx), plane = std::size_t(nx) * ny;
  const bool absorb = boundary_.absorbing_far;
  const double k = coefficient_;
  if (zero_row_.size() != row_len) zero_row_.assign(row_len, 0.0);
  double max_change = 0.0;

  // Ghost rows across a face: the row itself (zero flux) or zeros (absorbing).
  // The diamond surface below k = 0 is always zero flux.
  for (int kz = 0; kz < nz; ++kz) {
    for (int jy = 0; jy < ny; ++jy) {
      const std::size_t row = kz * plane + jy * row_len;
      const double* cur = r + row;
      const double* far = absorb ? zero_row_.data() : cur;
      const double* ym = jy > 0 ? cur - row_len : far;
      const double* yp = jy + 1 < ny ? cur + row_len : far;
      const double* zm = kz > 0 ? cur - plane : cur;
      const double* zp = kz + 1 < nz ? cur + plane : far;
      double* out = p.data() + row;
      for (int ix = 0; ix < nx; ++ix) {
        const double v = cur[ix];
        const double xm = ix > 0 ? cur[ix - 1] : (absorb ? 0.0 : v);
        const double xp = ix + 1 < nx ? cur[ix + 1] : (absorb ? 0.0 : v);
        const double next = v + k * (xm + xp + ym[ix] + yp[ix] + zm[ix] + zp[ix] - 6.0 * v);
        if (measure) max_change = std::max(max_change, std::abs(next - out[ix]));
        out[ix] = next;
      }
    }
  }
  return max_change;
}

PolarizationGrid step_pde(const SampleGrid& grid, const PolarizationGrid& p, const CoolingRateField& u,
                          double gamma1, double diffusion, double dt, PdeBoundary boundary) {
  PdeStepper stepper(grid, u.values, gamma1, diffusion, dt, boundary);
  PolarizationGrid out = p;
  stepper.step(out.values, false);
  out.time += dt;
  return out;
}

double polarized_spin_count(const SampleGrid& grid, const PolarizationGrid& p) {
  double s = 0.0;
  for (double v : p.values) s += v;
  return grid.density * grid.cell_volume() * s;
}

std::pair<PolarizationGrid, ConvergenceRecord> solve_steady_state(const SampleGrid& grid,
                                                                  const CoolingRateField& u, double gamma1,
                                                                  double diffusion,
                                                                  const SteadyStateOptions& options) {
  if (!(options.tolerance > 0.0)) throw ConfigError("steady state: tolerance must be positive");
  if (!(gamma1 > 0.0)) throw ConfigError("steady state: Gamma1 must be positive");
  double dt = options.dt_fraction * PdeStepper::max_stable_dt(grid.spacing, diffusion);
  if (!std::isfinite(dt)) dt = std::min(options.record_interval, 0.01 / gamma1);
  PdeStepper stepper(grid, u.values, gamma1, diffusion, dt);

  PolarizationGrid p;
  p.values.assign(grid.size(), 0.0);
  ConvergenceRecord rec;
  rec.dt = dt;
  rec.times.push_back(0.0);
  rec.count.push_back(0.0);

  const double t_limit = 20.0 / gamma1;
  const double target = options.tolerance * gamma1;
  double next_record = options.record_interval;
  double residual = std::numeric_limits<double>::infinity();
  while (true) {
    // The residual is measured on every kResidualStride-th step only.
    const bool measure = (rec.steps + 1) % kResidualStride == 0;
    const double change = stepper.step(p.values, measure);
    ++rec.steps;
    p.time = rec.steps * dt;
    const bool done = measure && change / dt < target;
    if (measure) residual = change / dt;
    if (p.time >= next_record - 1e-12 || done) {
      rec.times.push_back(p.time);
      rec.count.push_back(polarized_spin_count(grid, p));
      while (next_record <= p.time + 1e-12) next_record += options.record_interval;
    }
    if (done) break;
    if (p.time > t_limit) {
      std::ostringstream msg;
      msg << "steady state not reached after " << p.time << " s; residual max|dP/dt| = " << residual << " 1/s";
      throw ConvergenceError(msg.str(), residual);
    }
  }
  rec.converged_time = p.time;
  rec.residual = residual;
  return {std::move(p), std::move(rec)};
}

double half_mass_radius(const SampleGrid& grid, const PolarizationGrid& p) {
  double total = 0.0;
  Vec3 centroid = Vec3::Zero();
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double v = p.values[grid.index(i, j, k)];
        total += v;
        centroid += v * grid.center(i, j, k);
      }
  if (total <= 0.0) return 0.0;
  centroid /= total;
  std::vector<std::pair<double, double>> cells;
  cells.reserve(grid.size());
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double v = p.values[grid.index(i, j, k)];
        if (v > 0.0) cells.emplace_back((grid.center(i, j, k) - centroid).norm(), v);
      }
  std::sort(cells.begin(), cells.end());
  double acc = 0.0;
  for (const auto& [d, v] : cells) {
    acc += v;
    if (acc >= 0.5 * total) return d;
  }
  return cells.empty() ? 0.0 : cells.back().first;
}

void write_slice_xy(std::ostream& os, const SampleGrid& grid, const PolarizationGrid& p, int k) {
  if (k < 0 || k >= grid.nz) throw DimensionError("slice: z layer outside grid");
  os << "x_nm,y_nm,z_nm,P\n";
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec3 c = grid.center(i, j, k);
      os << format_number(c.x()) << ',' << format_number(c.y()) << ',' << format_number(c.z()) << ','
         << format_number(p.values[grid.index(i, j, k)]) << '\n';
    }
}

void write_slice_xz(std::ostream& os, const SampleGrid& grid, const PolarizationGrid& p, double y) {
  int j = static_cast<int>(std::floor((y - grid.y0) / grid.spacing));
  j = std::clamp(j, 0, grid.ny - 1);
  os << "x_nm,y_nm,z_nm,P\n";
  for (int k = 0; k < grid.nz; ++k)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec3 c = grid.center(i, j, k);
      os << format_number(c.x()) << ',' << format_number(c.y()) << ',' << format_number(c.z()) << ','
         << format_number(p.values[grid.index(i, j, k)]) << '\n';
    }
}

void write_map(std::ostream& os, const SampleGrid& grid, const PolarizationGrid& p) {
  os << "x_nm,y_nm,z_nm,P\n";
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const Vec3 c = grid.center(i, j, k);
        os << format_number(c.x()) << ',' << format_number(c.y()) << ',' << format_number(c.z()) << ','
           << format_number(p.values[grid.index(i, j, k)]) << '\n';
      }
}

// ---------------------------------------------------------------------------

double effective_diffusion(const ContinuumProblem& problem) {
  if (problem.diffusion > 0.0) return problem.diffusion;
  return spin_diffusion_constant(problem.grid.density, problem.constants.gamma_n);
}

ProtocolPlan plan_protocol(const ContinuumProblem& problem, Protocol protocol) {
  const bool mediated = protocol == Protocol::Mediated;
  ProtocolPlan plan;
  plan.protocol = protocol;
  const int n = mediated ? problem.harmonic_mediated : problem.harmonic_direct;
  plan.tau = resonance_spacing(n, problem.constants.gamma_n, problem.geometry.field);

  RateInputs in;
  in.geometry = problem.geometry;
  in.constants = problem.constants;
  in.spec.protocol = protocol;
  plan.cells = rate_cells(problem.grid, in);
  plan.b0 = b0_from_cells(problem.grid, plan.cells);
  if (mediated) {
    plan.a_zz = dipolar_azz(problem.geometry.electron_position - problem.geometry.nv_position(),
                            problem.geometry.nv_axis, problem.constants);
  }

  CycleSearch search;
  search.protocol = protocol;
  search.tau = plan.tau;
  search.a_zz = plan.a_zz;
  search.b0 = plan.b0;
  search.alpha = mediated ? problem.alpha_mediated : problem.alpha_direct;
  search.fidelity = problem.fidelity;
  search.gamma2_e = 1.0 / problem.t2_e;
  search.gamma2_nv = 1.0 / problem.t2_nv;
  search.dead_time = problem.dead_time;
  search.max_blocks = problem.max_blocks;
  plan.cycle = optimal_cycle_duration(search);

  plan.spec.protocol = protocol;
  plan.spec.alpha = search.alpha;
  plan.spec.fidelity = search.fidelity;
  plan.spec.gamma2_e = search.gamma2_e;
  plan.spec.gamma2_nv = search.gamma2_nv;
  plan.spec.dead_time = search.dead_time;
  plan.spec.cycle = plan.cycle.cycle;
  plan.spec.blocks = plan.cycle.blocks;
  return plan;
}

ContinuumResult solve_protocol(const ContinuumProblem& problem, Protocol protocol) {
  const ProtocolPlan plan = plan_protocol(problem, protocol);
  ContinuumResult out;
  out.protocol = protocol;
  out.tau = plan.tau;
  out.cycle = plan.cycle;

  RateInputs in;
  in.geometry = problem.geometry;
  in.constants = problem.constants;
  in.spec = plan.spec;
  out.rates = rates_from_cells(problem.grid, plan.cells, in);

  out.diffusion = effective_diffusion(problem);
  auto [p, rec] = solve_steady_state(problem.grid, out.rates.field, problem.gamma1, out.diffusion, problem.steady);
  out.steady = std::move(p);
  out.convergence = std::move(rec);
  out.spin_count = polarized_spin_count(problem.grid, out.steady);
  out.half_mass_radius = half_mass_radius(problem.grid, out.steady);
  return out;
}

std::vector<T2Point> t2_sweep(const ContinuumProblem& problem, std::span<const double> t2_values) {
  std::vector<T2Point> out;
  for (double t2 : t2_values) {
    if (!(t2 > 0.0)) throw ConfigError("t2 sweep values must be positive");
    ContinuumProblem p = problem;
    p.t2_e = t2;
    const ContinuumResult r = solve_protocol(p, Protocol::Mediated);
    out.push_back({t2, r.cycle.blocks, r.spin_count});
  }
  return out;
}

}  // namespace nvdnp
