#include "nvdnp/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nvdnp/errors.hpp"

namespace nvdnp {

namespace ops {

Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix pauli_y() {
  const Complex i(0.0, 1.0);
  Matrix m(2, 2);
  m << 0.0, -i, i, 0.0;
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix sigma_plus() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

Matrix sigma_minus() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

}  // namespace ops

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) < tol;
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())) < tol;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix embed(const Matrix& site_operator, std::size_t site_index, std::span<const int> register_dims) {
  if (site_index >= register_dims.size()) {
    std::ostringstream msg;
    msg << "embed: site index " << site_index << " outside register of " << register_dims.size()
        << " sites";
    throw DimensionError(msg.str());
  }
  if (site_operator.rows() != register_dims[site_index] ||
      site_operator.cols() != register_dims[site_index]) {
    std::ostringstream msg;
    msg << "embed: operator of dimension " << site_operator.rows() << "x" << site_operator.cols()
        << " does not match site " << site_index << " of dimension " << register_dims[site_index];
    throw DimensionError(msg.str());
  }
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t k = 0; k < register_dims.size(); ++k) {
    out = kron(out, k == site_index ? site_operator : ops::identity(register_dims[k]));
  }
  return out;
}

Matrix propagator(const Matrix& hamiltonian, double dt) {
  const double scale = std::max(1.0, max_abs(hamiltonian));
  if (!is_hermitian(hamiltonian, 1e-12 * scale)) {
    throw NotHermitianError("propagator: Hamiltonian is not Hermitian");
  }
  if (dt < 0.0) throw ConfigError("propagator: negative time step");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hamiltonian);
  const Eigen::VectorXd& w = eig.eigenvalues();
  Eigen::VectorXcd phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::polar(1.0, -w(k) * dt);
  const Matrix& v = eig.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

// ---------------------------------------------------------------------------
// DensityMatrix

namespace {

void check_trace_and_hermiticity(const Matrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    throw DimensionError("density matrix must be square and non-empty");
  }
  const Complex tr = rho.trace();
  if (std::abs(tr.real() - 1.0) > 1e-9 || std::abs(tr.imag()) > 1e-9) {
    std::ostringstream msg;
    msg << "density matrix trace " << tr.real() << " differs from 1";
    throw ConsistencyError(msg.str());
  }
  if (!is_hermitian(rho, 1e-10)) throw ConsistencyError("density matrix is not Hermitian");
}

}  // namespace

DensityMatrix::DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
  check_trace_and_hermiticity(rho_);
  if (min_eigenvalue() < -1e-8) throw ConsistencyError("density matrix is not positive semidefinite");
}

DensityMatrix::DensityMatrix(Matrix rho, TrustedTag) : rho_(std::move(rho)) {
  check_trace_and_hermiticity(rho_);
}

DensityMatrix DensityMatrix::trusted(Matrix rho) { return DensityMatrix(std::move(rho), TrustedTag{}); }

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
  const Eigen::VectorXcd n = psi.normalized();
  return DensityMatrix(n * n.adjoint());
}

DensityMatrix DensityMatrix::product(std::span<const Matrix> factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return DensityMatrix(std::move(out));
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rho_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Lindblad evolution

double max_lindblad_step(const Matrix& hamiltonian, std::span<const CollapseChannel> channels) {
  double max_rate = 0.0;
  for (const auto& c : channels) max_rate = std::max(max_rate, c.rate);
  double h_norm = 0.0;
  if (hamiltonian.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hamiltonian, Eigen::EigenvaluesOnly);
    h_norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  double dt = std::numeric_limits<double>::infinity();
  if (max_rate > 0.0) dt = std::min(dt, 1.0 / (50.0 * max_rate));
  if (h_norm > 0.0) dt = std::min(dt, 1.0 / (50.0 * h_norm));
  return dt;
}

Matrix lindblad_rhs(const Matrix& rho, const Matrix& hamiltonian,
                    std::span<const CollapseChannel> channels) {
  const Complex i(0.0, 1.0);
  Matrix out = -i * (hamiltonian * rho - rho * hamiltonian);
  for (const auto& c : channels) {
    if (c.rate < 0.0) throw ConfigError("collapse channel rate must be non-negative");
    if (c.rate == 0.0) continue;
    const Matrix ldl = c.op.adjoint() * c.op;
    out += c.rate * (c.op * rho * c.op.adjoint() - 0.5 * (ldl * rho + rho * ldl));
  }
  return out;
}

namespace {

void check_step_result(const Matrix& rho) {
  const double drift = std::abs(rho.trace().real() - 1.0);
  if (drift > 1e-6 || !std::isfinite(drift) || max_abs(rho) > 1.0 + 1e-6) {
    std::ostringstream msg;
    msg << "lindblad step too large: trace drift " << drift << ", max |rho_ij| " << max_abs(rho);
    throw IntegratorStepError(msg.str());
  }
}

}  // namespace

DensityMatrix lindblad_step(const DensityMatrix& rho, const Matrix& hamiltonian,
                            std::span<const CollapseChannel> channels, double dt) {
  const Matrix& r = rho.matrix();
  if (hamiltonian.rows() != r.rows()) throw DimensionError("lindblad_step: dimension mismatch");
  const Matrix k1 = lindblad_rhs(r, hamiltonian, channels);
  const Matrix k2 = lindblad_rhs(r + 0.5 * dt * k1, hamiltonian, channels);
  const Matrix k3 = lindblad_rhs(r + 0.5 * dt * k2, hamiltonian, channels);
  const Matrix k4 = lindblad_rhs(r + dt * k3, hamiltonian, channels);
  Matrix next = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check_step_result(next);
  // Strip antihermitian roundoff so long runs stay Hermitian to machine precision.
  next = 0.5 * (next + next.adjoint()).eval();
  return DensityMatrix::trusted(std::move(next));
}

LindbladIntegrator::LindbladIntegrator(Matrix hamiltonian, std::vector<CollapseChannel> channels)
    : max_step_(max_lindblad_step(hamiltonian, channels)) {
  const Complex i(0.0, 1.0);
  effective_ = hamiltonian;
  for (const auto& c : channels) {
    if (c.rate < 0.0) throw ConfigError("collapse channel rate must be non-negative");
    if (c.rate == 0.0) continue;
    effective_ -= 0.5 * i * c.rate * (c.op.adjoint() * c.op);
    jumps_.emplace_back(c.op, c.rate);
  }
}

Matrix LindbladIntegrator::rhs(const Matrix& rho) const {
  const Complex i(0.0, 1.0);
  Matrix hr = effective_ * rho;
  Matrix out = -i * hr + i * hr.adjoint();  // -i(H_eff rho - rho H_eff^dag) for Hermitian rho
  for (const auto& [op, rate] : jumps_) out.noalias() += rate * (op * rho * op.adjoint());
  return out;
}

void LindbladIntegrator::advance(Matrix& rho, double dt, std::size_t steps) const {
  for (std::size_t s = 0; s < steps; ++s) {
    const Matrix k1 = rhs(rho);
    const Matrix k2 = rhs(rho + 0.5 * dt * k1);
    const Matrix k3 = rhs(rho + 0.5 * dt * k2);
    const Matrix k4 = rhs(rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  check_step_result(rho);
  rho = 0.5 * (rho + rho.adjoint()).eval();
}

// ---------------------------------------------------------------------------

double expectation(const Matrix& rho, const Matrix& observable) {
  if (rho.rows() != observable.rows() || rho.cols() != observable.cols()) {
    throw DimensionError("expectation: dimension mismatch");
  }
  const Complex value = (rho * observable).trace();
  if (std::abs(value.imag()) >= 1e-8) {
    std::ostringstream msg;
    msg << "expectation value has imaginary residue " << value.imag();
    throw ConsistencyError(msg.str());
  }
  return value.real();
}

double expectation(const DensityMatrix& rho, const Matrix& observable) {
  return expectation(rho.matrix(), observable);
}

Matrix trace_out_leading(const Matrix& rho, Eigen::Index leading_dim) {
  const Eigen::Index rest = rho.rows() / leading_dim;
  if (rest * leading_dim != rho.rows()) throw DimensionError("trace_out_leading: dimension mismatch");
  Matrix out = Matrix::Zero(rest, rest);
  for (Eigen::Index a = 0; a < leading_dim; ++a) out += rho.block(a * rest, a * rest, rest, rest);
  return out;
}

}  // namespace nvdnp
