#pragma once

// Dense complex linear algebra for small composite spin registers.
//
// All frequencies handled here are angular (rad/us) and all times are in us.
// Register ordering is fixed by the caller through `dims`; embed() places the
// first site in the most significant Kronecker factor.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nvdnp {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

namespace ops {

Matrix identity(Eigen::Index dim);
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix sigma_plus();   // |up><down|
Matrix sigma_minus();  // |down><up|

// Spin-1/2 operators S = sigma/2.
inline Matrix spin_x() { return 0.5 * pauli_x(); }
inline Matrix spin_y() { return 0.5 * pauli_y(); }
inline Matrix spin_z() { return 0.5 * pauli_z(); }

}  // namespace ops

double max_abs(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = 1e-12);
bool is_unitary(const Matrix& m, double tol = 1e-10);

// identity x ... x site_operator x ... x identity, in register order.
Matrix embed(const Matrix& site_operator, std::size_t site_index, std::span<const int> register_dims);

// exp(-i H dt) from the Hermitian eigendecomposition of H.
Matrix propagator(const Matrix& hamiltonian, double dt);

class DensityMatrix {
 public:
  // Validates trace, Hermiticity and numerical positivity.
  explicit DensityMatrix(Matrix rho);

  // Skips the eigenvalue positivity check; trace and Hermiticity are still
  // enforced. For states produced by trace-preserving maps inside loops.
  static DensityMatrix trusted(Matrix rho);

  static DensityMatrix maximally_mixed(Eigen::Index dim);
  static DensityMatrix pure(const Eigen::VectorXcd& psi);
  static DensityMatrix product(std::span<const Matrix> factors);

  const Matrix& matrix() const { return rho_; }
  Eigen::Index dim() const { return rho_.rows(); }
  double trace() const { return rho_.trace().real(); }
  double min_eigenvalue() const;

 private:
  struct TrustedTag {};
  DensityMatrix(Matrix rho, TrustedTag);
  Matrix rho_;
};

struct CollapseChannel {
  Matrix op;
  double rate = 0.0;  // 1/us
};

// Largest RK4 step allowed by the integrator rule
// dt <= min(1/(50 max rate), 1/(50 ||H||_2)).
double max_lindblad_step(const Matrix& hamiltonian, std::span<const CollapseChannel> channels);

// Right-hand side of the Lindblad equation.
Matrix lindblad_rhs(const Matrix& rho, const Matrix& hamiltonian,
                    std::span<const CollapseChannel> channels);

// One fixed-step RK4 step of the master equation.
DensityMatrix lindblad_step(const DensityMatrix& rho, const Matrix& hamiltonian,
                            std::span<const CollapseChannel> channels, double dt);

// Precomputed generator for repeated RK4 stepping with one Hamiltonian.
class LindbladIntegrator {
 public:
  LindbladIntegrator(Matrix hamiltonian, std::vector<CollapseChannel> channels);

  // Advances rho in place by `steps` RK4 steps of size dt.
  void advance(Matrix& rho, double dt, std::size_t steps) const;
  double max_step() const { return max_step_; }

 private:
  Matrix rhs(const Matrix& rho) const;

  Matrix effective_;  // H - (i/2) sum_k r_k L_k^dag L_k
  std::vector<std::pair<Matrix, double>> jumps_;
  double max_step_;
};

// Tr(rho obs) for Hermitian obs.
double expectation(const DensityMatrix& rho, const Matrix& observable);
double expectation(const Matrix& rho, const Matrix& observable);

// Partial trace over the leading factor of dimension `leading_dim`.
Matrix trace_out_leading(const Matrix& rho, Eigen::Index leading_dim);

Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace nvdnp
