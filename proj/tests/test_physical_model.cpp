#include <cmath>
#include <vector>

#include "doctest.h"
#include "nvdnp/errors.hpp"
#include "nvdnp/physical_model.hpp"

using namespace nvdnp;

namespace {

const PhysicalConstants kC = PhysicalConstants::standard();
const double kMagic = std::acos(1.0 / std::sqrt(3.0));

Vec3 polar(double r, double theta) { return {r * std::sin(theta), 0.0, r * std::cos(theta)}; }

}  // namespace

TEST_SUITE("physical_model") {

TEST_CASE("electron-electron prefactor") {
  CHECK(to_linear(kC.dipolar_ee_prefactor) == doctest::Approx(52.04).epsilon(1e-3));
  // Consistent with gamma_e^2 scaling.
  const double ratio = PhysicalConstants::dipolar_prefactor(kC.gamma_e, kC.gamma_n) / kC.dipolar_ee_prefactor;
  CHECK(ratio == doctest::Approx(kC.gamma_n / kC.gamma_e).epsilon(1e-12));
  CHECK(to_linear(kC.gamma_n) == doctest::Approx(4.2577e-3).epsilon(1e-4));
}

TEST_CASE("A_zz examples") {
  const Vec3 z = Vec3::UnitZ();
  CHECK(to_linear(dipolar_azz(polar(1.0, 0.0), z, kC)) == doctest::Approx(-104.08).epsilon(1e-3));
  CHECK(to_linear(dipolar_azz(polar(3.5, 0.0), z, kC)) == doctest::Approx(-2.428).epsilon(1e-3));
  CHECK(std::abs(dipolar_azz(polar(2.0, kMagic), z, kC)) < 1e-12);
  CHECK_THROWS_AS(dipolar_azz(Vec3::Zero(), z, kC), ConfigError);
}

TEST_CASE("A_zz scales as r^-3") {
  const Vec3 axis = Vec3(0.3, 0.1, 1.0).normalized();
  const Vec3 r(0.7, -0.4, 1.2);
  CHECK(dipolar_azz(2.0 * r, axis, kC) == doctest::Approx(dipolar_azz(r, axis, kC) / 8.0).epsilon(1e-12));
}

TEST_CASE("B_perp examples") {
  const Vec3 z = Vec3::UnitZ();
  const double gn = kC.gamma_n;
  CHECK(dipolar_b_secular(polar(0.5, 0.0), z, gn, kC).perp() < 1e-12);
  const SecularCoupling b45 = dipolar_b_secular(polar(0.26, kPi / 4.0), z, gn, kC);
  CHECK(to_linear(b45.perp()) == doctest::Approx(6.74).epsilon(5e-3));
  const SecularCoupling b90 = dipolar_b_secular(polar(0.4, kPi / 2.0), z, gn, kC);
  const double k = PhysicalConstants::dipolar_prefactor(kC.gamma_e, gn) / std::pow(0.4, 3);
  CHECK(b90.perp() < 1e-12);
  CHECK(b90.zz == doctest::Approx(k).epsilon(1e-12));
  CHECK_THROWS_AS(dipolar_b_secular(Vec3::Zero(), z, gn, kC), ConfigError);
}

TEST_CASE("B_perp is the norm of its components and matches the fast path") {
  const Vec3 axis = Vec3(std::sin(0.955), 0.0, std::cos(0.955));
  const double pref = PhysicalConstants::dipolar_prefactor(kC.gamma_e, kC.gamma_n);
  for (const Vec3& r : {Vec3(0.4, 0.2, 0.3), Vec3(-1.0, 2.0, 0.5), Vec3(0.0, -0.3, 0.9)}) {
    const SecularCoupling s = dipolar_b_secular(r, axis, kC.gamma_n, kC);
    CHECK(std::abs(s.perp() - std::hypot(s.zx, s.zy)) < 1e-12);
    CHECK(dipolar_b_perp(r, axis, pref) == doctest::Approx(s.perp()).epsilon(1e-12));
  }
}

TEST_CASE("coupling is invariant under a common rotation of field and position") {
  const Vec3 r(0.5, -0.2, 0.7);
  const Vec3 axis = Vec3(0.2, 0.4, 1.0).normalized();
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.83, Vec3(1.0, 2.0, -0.5).normalized()).toRotationMatrix();
  CHECK(dipolar_azz(rot * r, rot * axis, kC) == doctest::Approx(dipolar_azz(r, axis, kC)).epsilon(1e-12));
  const double pref = PhysicalConstants::dipolar_prefactor(kC.gamma_e, kC.gamma_n);
  CHECK(dipolar_b_perp(rot * r, rot * axis, pref) == doctest::Approx(dipolar_b_perp(r, axis, pref)).epsilon(1e-12));
}

TEST_CASE("transverse frame is orthonormal and right-handed") {
  for (const Vec3& a : {Vec3(0.0, 0.0, 1.0), Vec3(1.0, 0.0, 0.0), Vec3(0.3, -0.5, 0.8).normalized()}) {
    const auto [x, y] = transverse_frame(a);
    CHECK(std::abs(x.dot(a)) < 1e-12);
    CHECK(std::abs(y.dot(a)) < 1e-12);
    CHECK(x.norm() == doctest::Approx(1.0));
    CHECK((x.cross(y) - a).norm() < 1e-12);
  }
}

TEST_CASE("aggregate B0") {
  const std::vector<double> one{0.7};
  CHECK(aggregate_b0(one) == doctest::Approx(0.7));
  const std::vector<double> three{to_angular(1.0), to_angular(0.6), to_angular(0.4)};
  CHECK(to_linear(aggregate_b0(three)) == doctest::Approx(1.2329).epsilon(1e-4));
  const std::vector<double> zero{0.0, 0.0};
  CHECK(aggregate_b0(zero) == 0.0);
}

TEST_CASE("rotating-frame Hamiltonian examples") {
  SpinRegister reg;
  reg.couplings.a_zz = to_angular(0.4);
  const Matrix h = build_rotating_hamiltonian(reg, {});
  const std::vector<int> d{2, 2};
  const Matrix expect = 0.5 * reg.couplings.a_zz *
                        (embed(ops::pauli_z(), 0, d) * embed(ops::spin_z(), 1, d) + embed(ops::spin_z(), 1, d));
  CHECK(max_abs(h - expect) < 1e-14);
  CHECK(max_abs(h - Matrix(h.diagonal().asDiagonal())) < 1e-15);

  SpinRegister bare;
  DriveSetting drive;
  drive.nv.rabi = to_angular(20.0);
  CHECK(max_abs(build_rotating_hamiltonian(bare, drive) - 0.5 * drive.nv.rabi * embed(ops::pauli_x(), 0, d)) <
        1e-12);
}

TEST_CASE("nuclear Zeeman splitting at 430 G") {
  SpinRegister reg;
  reg.couplings.nuclei.push_back({});
  reg.nuclear_larmor = proton_gamma() * 430.0;
  const Matrix h = build_rotating_hamiltonian(reg, {});
  CHECK(is_hermitian(h));
  CHECK(to_linear(h(0, 0).real()) == doctest::Approx(0.9154).epsilon(1e-3));
  CHECK(to_linear(h(1, 1).real()) == doctest::Approx(-0.9154).epsilon(1e-3));
}

TEST_CASE("Hamiltonian is Hermitian with drives, detunings and nuclei") {
  SpinRegister reg;
  reg.couplings.a_zz = 0.9;
  reg.couplings.nuclei = {{0.3, -0.2, 0.1}, {0.05, 0.4, -0.3}};
  reg.nuclear_larmor = 2.1;
  DriveSetting d{{3.0, 0.4, 0.2}, {2.5, -1.1, -0.3}};
  const Matrix h = build_rotating_hamiltonian(reg, d);
  CHECK(h.rows() == 16);
  CHECK(is_hermitian(h, 1e-14));
  CHECK(build_rotating_hamiltonian(reg, d, false).rows() == 4);
}

TEST_CASE("tilted geometry and surface validation") {
  SystemGeometry g = SystemGeometry::tilted(3.5, 54.7 * kPi / 180.0, 390.0);
  CHECK(g.nv_axis.norm() == doctest::Approx(1.0));
  CHECK(g.nv_axis.x() > 0.0);
  g.nuclei.push_back({0.0, 0.0, -0.1});
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("optimal electron position maximises |A_zz| on the surface") {
  SystemGeometry g = SystemGeometry::tilted(3.5, 54.7 * kPi / 180.0, 390.0);
  const Vec3 best = optimal_electron_position(g, kC);
  CHECK(best.z() == 0.0);
  const double a = std::abs(dipolar_azz(best - g.nv_position(), g.nv_axis, kC));
  // NV directly below gives almost nothing at the magic angle.
  CHECK(std::abs(dipolar_azz(-g.nv_position(), g.nv_axis, kC)) < 0.01 * a);
  for (double dx : {-0.2, 0.2}) {
    for (double dy : {-0.2, 0.2}) {
      const Vec3 p = best + Vec3(dx, dy, 0.0);
      CHECK(std::abs(dipolar_azz(p - g.nv_position(), g.nv_axis, kC)) <= a + 1e-12);
    }
  }
}

TEST_CASE("register built from geometry") {
  SystemGeometry g = SystemGeometry::tilted(3.5, 0.0, 430.0);
  g.electron_position = {1.0, 0.0, 0.0};
  g.nuclei = {{1.2, 0.1, 0.2}};
  const SpinRegister reg = SpinRegister::from_geometry(g, kC);
  CHECK(reg.dim() == 8);
  CHECK(reg.nuclear_larmor == doctest::Approx(kC.gamma_n * 430.0));
  CHECK(reg.couplings.a_zz == doctest::Approx(dipolar_azz(g.electron_position - g.nv_position(), g.nv_axis, kC)));
}

}  // TEST_SUITE
