#include <cmath>
#include <vector>

#include "doctest.h"
#include "nvdnp/errors.hpp"
#include "nvdnp/spin_algebra.hpp"

using namespace nvdnp;

namespace {

Matrix diag(std::initializer_list<double> d) {
  Matrix m = Matrix::Zero(Eigen::Index(d.size()), Eigen::Index(d.size()));
  Eigen::Index i = 0;
  for (double v : d) m(i, i) = v, ++i;
  return m;
}

const std::vector<int> kPair{2, 2};

Matrix ket_density(int dim, int index) {
  Matrix m = Matrix::Zero(dim, dim);
  m(index, index) = 1.0;
  return m;
}

}  // namespace

TEST_SUITE("spin_algebra") {

TEST_CASE("embed places the operator at the requested site") {
  CHECK(max_abs(embed(ops::spin_z(), 1, kPair) - diag({0.5, -0.5, 0.5, -0.5})) < 1e-15);
  CHECK(max_abs(embed(ops::identity(2), 0, kPair) - ops::identity(4)) < 1e-15);
  const std::vector<int> three{2, 2, 2};
  CHECK(max_abs(embed(ops::pauli_z(), 0, three) - diag({1, 1, 1, 1, -1, -1, -1, -1})) < 1e-15);
}

TEST_CASE("embed rejects mismatched dimensions") {
  CHECK_THROWS_AS(embed(ops::pauli_z(), 2, kPair), DimensionError);
  CHECK_THROWS_AS(embed(ops::identity(3), 0, kPair), DimensionError);
}

TEST_CASE("propagator examples") {
  CHECK(max_abs(propagator(Matrix::Zero(4, 4), 1.0) - ops::identity(4)) < 1e-14);
  const Matrix u = propagator(kTwoPi * ops::spin_z(), 1.0);
  CHECK(max_abs(u + ops::identity(2)) < 1e-12);
  Matrix bad = ops::sigma_plus();
  CHECK_THROWS_AS(propagator(bad, 1.0), NotHermitianError);
}

TEST_CASE("propagator is unitary and composes") {
  const Matrix h = 1.3 * kron(ops::pauli_x(), ops::spin_y()) + 0.7 * kron(ops::pauli_z(), ops::spin_z()) +
                   0.2 * kron(ops::identity(2), ops::spin_x());
  const Matrix a = propagator(h, 0.37);
  const Matrix b = propagator(h, 0.81);
  CHECK(is_unitary(a, 1e-12));
  CHECK(max_abs(a * b - propagator(h, 1.18)) < 1e-12);
}

TEST_CASE("flip-flop Hamiltonian transfers NV polarization to a thermal electron") {
  // Effective NV-electron exchange (A/4)(sx Ex + sy Ey) gives -sin^2(A t/4).
  const double a = kTwoPi * 0.4;
  const Matrix h = 0.25 * a * (embed(ops::pauli_x(), 0, kPair) * embed(ops::spin_x(), 1, kPair) +
                               embed(ops::pauli_y(), 0, kPair) * embed(ops::spin_y(), 1, kPair));
  // NV |0> is index 1 of the NV factor.
  const Matrix rho0 = kron(ket_density(2, 1), 0.5 * ops::identity(2));
  const Matrix ez2 = embed(ops::pauli_z(), 1, kPair);
  for (double t : {0.3, 1.1, 2.5, 4.0}) {
    const Matrix u = propagator(h, t);
    const Matrix rho = u * rho0 * u.adjoint();
    const double s = std::sin(a * t / 4.0);
    CHECK(expectation(rho, ez2) == doctest::Approx(-s * s).epsilon(1e-10));
  }
  const Matrix u = propagator(h, kTwoPi / a);
  CHECK(expectation(Matrix(u * rho0 * u.adjoint()), ez2) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("density matrix validation") {
  CHECK_NOTHROW(DensityMatrix(ops::identity(2) * 0.5));
  CHECK_THROWS_AS(DensityMatrix(ops::identity(2)), ConsistencyError);
  CHECK_THROWS_AS(DensityMatrix(ops::sigma_plus() + 0.5 * ops::identity(2)), ConsistencyError);
  CHECK_THROWS_AS(DensityMatrix(diag({1.5, -0.5})), ConsistencyError);
}

TEST_CASE("expectation examples") {
  CHECK(expectation(DensityMatrix::maximally_mixed(2), ops::pauli_z()) == doctest::Approx(0.0));
  CHECK(expectation(DensityMatrix(ket_density(2, 1)), ops::pauli_z()) == doctest::Approx(-1.0));
}

TEST_CASE("lindblad without channels or Hamiltonian leaves rho unchanged") {
  Matrix rho = ket_density(2, 0) * 0.25 + ket_density(2, 1) * 0.75;
  rho(0, 1) = 0.2;
  rho(1, 0) = 0.2;
  LindbladIntegrator integ(Matrix::Zero(2, 2), {});
  Matrix r = rho;
  integ.advance(r, 0.01, 100);
  CHECK(max_abs(r - rho) < 1e-15);
}

TEST_CASE("pure dephasing decays coherences at Gamma") {
  const double gamma = 0.8;
  std::vector<CollapseChannel> ch{{ops::pauli_z(), gamma / 2.0}};
  Matrix rho = Matrix::Constant(2, 2, 0.5);
  LindbladIntegrator integ(Matrix::Zero(2, 2), ch);
  const double dt = 0.01;
  integ.advance(rho, dt, 250);
  CHECK(std::abs(rho(0, 1)) == doctest::Approx(0.5 * std::exp(-gamma * 2.5)).epsilon(1e-6));
}

TEST_CASE("T1 channels relax polarization toward zero") {
  const double t1 = 3.0;
  std::vector<CollapseChannel> ch{{ops::sigma_plus(), 0.5 / t1}, {ops::sigma_minus(), 0.5 / t1}};
  Matrix rho = ket_density(2, 0);
  LindbladIntegrator integ(Matrix::Zero(2, 2), ch);
  integ.advance(rho, 0.01, 300);
  CHECK(expectation(rho, ops::pauli_z()) == doctest::Approx(std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("lindblad preserves trace, Hermiticity and positivity over 1e4 steps") {
  const Matrix h = 2.0 * kron(ops::pauli_x(), ops::spin_x()) + 1.5 * kron(ops::pauli_z(), ops::spin_z()) +
                   0.4 * kron(ops::identity(2), ops::spin_y());
  std::vector<CollapseChannel> ch{{embed(ops::sigma_minus(), 1, kPair), 0.3},
                                  {embed(ops::pauli_z(), 0, kPair), 0.1},
                                  {embed(ops::sigma_plus(), 1, kPair), 0.05}};
  DensityMatrix rho(kron(ket_density(2, 1), 0.5 * ops::identity(2)));
  const double dt = max_lindblad_step(h, ch);
  for (int i = 0; i < 10000; ++i) rho = lindblad_step(rho, h, ch, dt);
  CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(is_hermitian(rho.matrix(), 1e-12));
  CHECK(rho.min_eigenvalue() > -1e-10);
}

TEST_CASE("oversized steps are rejected") {
  std::vector<CollapseChannel> ch{{ops::sigma_minus(), 1.0}};
  DensityMatrix rho(ket_density(2, 0));
  CHECK_THROWS_AS(lindblad_step(rho, Matrix::Zero(2, 2), ch, 5.0), IntegratorStepError);
}

TEST_CASE("noiseless lindblad matches the unitary propagator") {
  const Matrix h = 1.1 * kron(ops::pauli_x(), ops::spin_x()) + 0.6 * kron(ops::pauli_y(), ops::spin_z());
  const Matrix rho0 = kron(ket_density(2, 1), 0.5 * ops::identity(2));
  Matrix rho = rho0;
  LindbladIntegrator integ(h, {});
  const std::size_t steps = 400;
  integ.advance(rho, 2.0 / steps, steps);
  const Matrix u = propagator(h, 2.0);
  CHECK(max_abs(rho - u * rho0 * u.adjoint()) < 1e-8);
}

TEST_CASE("partial trace over the leading factor") {
  const Matrix a = ket_density(2, 0);
  Matrix b = 0.5 * ops::identity(2);
  b(0, 1) = 0.1;
  b(1, 0) = 0.1;
  CHECK(max_abs(trace_out_leading(kron(a, b), 2) - b) < 1e-15);
}

}  // TEST_SUITE
