#include "nvdnp/physical_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvdnp/errors.hpp"

namespace nvdnp {

namespace {

constexpr double kHbar = 1.054571817e-34;      // J s
constexpr double kMu0Over4Pi = 1e-7;           // T m / A
constexpr double kGammaELinear = -2.802495;    // MHz/G
constexpr double kGammaHLinear = 4.2577e-3;    // MHz/G
constexpr double kZeroFieldSplitting = 2870.0; // MHz

// rad/us/G -> rad/s/T
constexpr double kGammaToSi = 1e6 * 1e4;
// rad/s m^3 -> rad/us nm^3
constexpr double kSiToInternal = 1e-6 * 1e27;

}  // namespace

double proton_gamma() { return to_angular(kGammaHLinear); }

PhysicalConstants PhysicalConstants::standard() {
  PhysicalConstants c{};
  c.gamma_e = to_angular(kGammaELinear);
  c.gamma_n = proton_gamma();
  c.dipolar_ee_prefactor = dipolar_prefactor(c.gamma_e, c.gamma_e);
  c.zero_field_splitting = to_angular(kZeroFieldSplitting);
  return c;
}

double PhysicalConstants::dipolar_prefactor(double gamma_1, double gamma_2) {
  return kHbar * kMu0Over4Pi * (gamma_1 * kGammaToSi) * (gamma_2 * kGammaToSi) * kSiToInternal;
}

SystemGeometry SystemGeometry::tilted(double nv_depth, double tilt, double field) {
  SystemGeometry g;
  g.nv_depth = nv_depth;
  g.nv_axis = Vec3(std::sin(tilt), 0.0, std::cos(tilt));
  g.field = field;
  return g;
}

void SystemGeometry::validate() const {
  if (std::abs(nv_axis.norm() - 1.0) > 1e-12) throw ConfigError("geometry: nv_axis is not normalized");
  if (nv_depth < 0.0) throw ConfigError("geometry: nv_depth must be non-negative");
  for (std::size_t k = 0; k < nuclei.size(); ++k) {
    if (nuclei[k].z() < 0.0) {
      std::ostringstream msg;
      msg << "geometry: nucleus " << k << " lies inside the diamond (z < 0)";
      throw ConfigError(msg.str());
    }
  }
}

double SecularCoupling::perp() const { return std::hypot(zx, zy); }

std::pair<Vec3, Vec3> transverse_frame(const Vec3& axis) {
  const Vec3 b = axis.normalized();
  Vec3 ref = Vec3::UnitX();
  if (std::abs(ref.dot(b)) > 0.9) ref = Vec3::UnitY();
  const Vec3 ex = (ref - ref.dot(b) * b).normalized();
  const Vec3 ey = b.cross(ex);
  return {ex, ey};
}

namespace {

double checked_norm(const Vec3& r, const char* who) {
  const double n = r.norm();
  if (!(n > 0.0)) throw ConfigError(std::string(who) + ": zero separation vector");
  return n;
}

}  // namespace

double dipolar_azz(const Vec3& r, const Vec3& b_axis, const PhysicalConstants& constants) {
  const double d = checked_norm(r, "dipolar_azz");
  const double c = r.dot(b_axis) / (d * b_axis.norm());
  return constants.dipolar_ee_prefactor / (d * d * d) * (1.0 - 3.0 * c * c);
}

SecularCoupling dipolar_b_secular(const Vec3& r, const Vec3& b_axis, double gamma_n,
                                  const PhysicalConstants& constants) {
  const double d = checked_norm(r, "dipolar_b_secular");
  const Vec3 b = b_axis.normalized();
  const auto [ex, ey] = transverse_frame(b);
  const Vec3 u = r / d;
  const double k = PhysicalConstants::dipolar_prefactor(constants.gamma_e, gamma_n) / (d * d * d);
  const double c = u.dot(b);
  return {-3.0 * k * c * u.dot(ex), -3.0 * k * c * u.dot(ey), k * (1.0 - 3.0 * c * c)};
}

double dipolar_b_perp(const Vec3& r, const Vec3& b_axis, double prefactor) {
  const double d2 = r.squaredNorm();
  const double d = std::sqrt(d2);
  const double c = r.dot(b_axis) / d;
  const double s2 = std::max(0.0, 1.0 - c * c);
  return 3.0 * std::abs(prefactor) / (d2 * d) * std::abs(c) * std::sqrt(s2);
}

CouplingSet couplings_from_geometry(const SystemGeometry& geometry, const PhysicalConstants& constants) {
  geometry.validate();
  CouplingSet out;
  out.a_zz = dipolar_azz(geometry.electron_position - geometry.nv_position(), geometry.nv_axis, constants);
  for (const auto& n : geometry.nuclei) {
    out.nuclei.push_back(
        dipolar_b_secular(n - geometry.electron_position, geometry.nv_axis, constants.gamma_n, constants));
  }
  return out;
}

double aggregate_b0(std::span<const double> b_perp) {
  double s = 0.0;
  for (double b : b_perp) s += b * b;
  return std::sqrt(s);
}

SpinRegister SpinRegister::from_geometry(const SystemGeometry& geometry, const PhysicalConstants& constants) {
  return {couplings_from_geometry(geometry, constants), constants.gamma_n * geometry.field};
}

Matrix build_rotating_hamiltonian(const SpinRegister& reg, const DriveSetting& drive, bool include_nuclei) {
  std::vector<int> dims = include_nuclei ? reg.dims() : std::vector<int>{2, 2};
  const auto sz_nv = embed(ops::pauli_z(), 0, dims);
  const auto sx_nv = embed(ops::pauli_x(), 0, dims);
  const auto sy_nv = embed(ops::pauli_y(), 0, dims);
  const auto ex = embed(ops::spin_x(), 1, dims);
  const auto ey = embed(ops::spin_y(), 1, dims);
  const auto ez = embed(ops::spin_z(), 1, dims);

  const double a = reg.couplings.a_zz;
  Matrix h = 0.5 * a * (sz_nv * ez + ez);
  h += 0.5 * drive.nv.detuning * sz_nv + drive.electron.detuning * ez;
  h += 0.5 * drive.nv.rabi * (std::cos(drive.nv.phase) * sx_nv - std::sin(drive.nv.phase) * sy_nv);
  h += drive.electron.rabi * (std::cos(drive.electron.phase) * ex + std::sin(drive.electron.phase) * ey);

  if (include_nuclei) {
    for (std::size_t k = 0; k < reg.nuclei_count(); ++k) {
      const auto& b = reg.couplings.nuclei[k];
      const std::size_t site = 2 + k;
      const auto ix = embed(ops::spin_x(), site, dims);
      const auto iy = embed(ops::spin_y(), site, dims);
      const auto iz = embed(ops::spin_z(), site, dims);
      h += reg.nuclear_larmor * iz;
      h += ez * (b.zx * ix + b.zy * iy + b.zz * iz);
    }
  }
  return h;
}

Matrix build_rotating_hamiltonian(const SystemGeometry& geometry, const PhysicalConstants& constants,
                                  const DriveSetting& drive, bool include_nuclei) {
  return build_rotating_hamiltonian(SpinRegister::from_geometry(geometry, constants), drive, include_nuclei);
}

RegisterObservables::RegisterObservables(const SpinRegister& reg) {
  const auto dims = reg.dims();
  nv = embed(ops::pauli_z(), 0, dims);
  electron = embed(ops::pauli_z(), 1, dims);
  for (std::size_t k = 0; k < reg.nuclei_count(); ++k) nuclei.push_back(embed(ops::pauli_z(), 2 + k, dims));
}

Vec3 optimal_electron_position(const SystemGeometry& geometry, const PhysicalConstants& constants) {
  const Vec3 nv = geometry.nv_position();
  const double span = 3.0 * std::max(geometry.nv_depth, 0.5);
  auto score = [&](double x, double y) {
    const Vec3 r = Vec3(x, y, 0.0) - nv;
    return std::abs(dipolar_azz(r, geometry.nv_axis, constants));
  };

  // Coarse scan, then shrinking pattern search around the best point.
  const int n = 120;
  double best_x = 0.0, best_y = 0.0, best = -1.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double x = -span + 2.0 * span * i / n;
      const double y = -span + 2.0 * span * j / n;
      const double s = score(x, y);
      if (s > best) {
        best = s;
        best_x = x;
        best_y = y;
      }
    }
  }
  double step = 2.0 * span / n;
  while (step > 1e-9) {
    bool moved = false;
    for (auto [dx, dy] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}) {
      const double s = score(best_x + dx * step, best_y + dy * step);
      if (s > best) {
        best = s;
        best_x += dx * step;
        best_y += dy * step;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return {best_x, best_y, 0.0};
}

}  // namespace nvdnp
