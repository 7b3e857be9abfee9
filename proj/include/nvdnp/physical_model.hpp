#pragma once

// Constants, geometry, dipolar couplings and the rotating-frame Hamiltonian of
// the NV - surface electron - nuclei register.
//
// Units: internal frequencies are angular (rad/us); gyromagnetic ratios are
// rad/us per Gauss; lengths are nm. to_angular()/to_linear() convert at the
// MHz boundary.
//
// Register layout: site 0 is the NV reduced to {|1>, |0>} (index 0 = |1>, so
// sigma_z^NV = |1><1| - |0><0| is the Pauli z), site 1 is the electron, sites
// 2.. are spin-1/2 nuclei.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nvdnp/spin_algebra.hpp"

namespace nvdnp {

using Vec3 = Eigen::Vector3d;

inline constexpr double to_angular(double mhz) { return kTwoPi * mhz; }
inline constexpr double to_linear(double rad_per_us) { return rad_per_us / kTwoPi; }

struct PhysicalConstants {
  double gamma_e;                // rad/us/G, negative
  double gamma_n;                // rad/us/G, 1H by default
  double dipolar_ee_prefactor;   // hbar mu0 gamma_e^2 / 4pi, rad/us nm^3
  double zero_field_splitting;   // rad/us

  // CODATA values; the dipolar prefactor is derived from SI constants.
  static PhysicalConstants standard();

  // hbar mu0 g1 g2 / 4pi for gyromagnetic ratios in rad/us/G, in rad/us nm^3.
  static double dipolar_prefactor(double gamma_1, double gamma_2);
};

// Gyromagnetic ratio of 1H, rad/us/G.
double proton_gamma();

struct SystemGeometry {
  double nv_depth = 3.5;             // nm; NV sits at (0, 0, -nv_depth)
  Vec3 nv_axis = Vec3::UnitZ();      // unit vector along B
  Vec3 electron_position = Vec3::Zero();
  std::vector<Vec3> nuclei;          // z >= 0
  double field = 0.0;                // Gauss along nv_axis

  // NV axis tilted by `tilt` radians from the surface normal inside the xz plane.
  static SystemGeometry tilted(double nv_depth, double tilt, double field);

  Vec3 nv_position() const { return {0.0, 0.0, -nv_depth}; }
  void validate() const;
};

struct SecularCoupling {
  double zx = 0.0;
  double zy = 0.0;
  double zz = 0.0;

  double perp() const;
  static SecularCoupling transverse(double b_perp) { return {b_perp, 0.0, 0.0}; }
};

struct CouplingSet {
  double a_zz = 0.0;                      // NV - electron, rad/us
  std::vector<SecularCoupling> nuclei;    // electron - nucleus, rad/us
};

// Orthonormal (x, y) completing `axis` to a right-handed frame. The x axis is
// the projection of the lab x axis (lab y when axis is along x).
std::pair<Vec3, Vec3> transverse_frame(const Vec3& axis);

// (hbar mu0 gamma_e^2 / 4pi |r|^3)(1 - 3 cos^2 theta).
double dipolar_azz(const Vec3& r, const Vec3& b_axis, const PhysicalConstants& constants);

// Secular electron-nucleus components in the frame whose z axis is b_axis.
SecularCoupling dipolar_b_secular(const Vec3& r, const Vec3& b_axis, double gamma_n,
                                  const PhysicalConstants& constants);

// Transverse magnitude only; cheaper than dipolar_b_secular for field sums.
double dipolar_b_perp(const Vec3& r, const Vec3& b_axis, double prefactor);

CouplingSet couplings_from_geometry(const SystemGeometry& geometry, const PhysicalConstants& constants);

// sqrt(sum b_i^2).
double aggregate_b0(std::span<const double> b_perp);

struct ChannelDrive {
  double rabi = 0.0;      // rad/us
  double phase = 0.0;     // rad
  double detuning = 0.0;  // rad/us
};

struct DriveSetting {
  ChannelDrive nv;
  ChannelDrive electron;
};

struct SpinRegister {
  CouplingSet couplings;
  double nuclear_larmor = 0.0;  // gamma_n B, rad/us

  std::size_t nuclei_count() const { return couplings.nuclei.size(); }
  std::vector<int> dims() const { return std::vector<int>(2 + nuclei_count(), 2); }
  Eigen::Index dim() const { return Eigen::Index(1) << (2 + nuclei_count()); }

  static SpinRegister from_geometry(const SystemGeometry& geometry, const PhysicalConstants& constants);
};

// H = (A/2)(sz^NV Ez + Ez) + D_nv sz^NV/2 + D_e Ez
//     + (W1/2)(sx^NV cos p1 - sy^NV sin p1) + W2 (Ex cos p2 + Ey sin p2)
//     [+ gamma_n B Iz + Ez (Bzx Ix + Bzy Iy + Bzz Iz) per nucleus]
Matrix build_rotating_hamiltonian(const SpinRegister& reg, const DriveSetting& drive,
                                  bool include_nuclei = true);

Matrix build_rotating_hamiltonian(const SystemGeometry& geometry, const PhysicalConstants& constants,
                                  const DriveSetting& drive, bool include_nuclei);

// Site observables of a register: sigma_z^NV, 2Ez, 2Iz^(k).
struct RegisterObservables {
  Matrix nv;
  Matrix electron;
  std::vector<Matrix> nuclei;

  explicit RegisterObservables(const SpinRegister& reg);
};

// Surface point (z = 0) maximising |A_zz| for the given NV placement.
Vec3 optimal_electron_position(const SystemGeometry& geometry, const PhysicalConstants& constants);

}  // namespace nvdnp
