#ifndef DAPI_LYAPUNOV_HPP
#define DAPI_LYAPUNOV_HPP

// Dense solver for the continuous Lyapunov equation A^T X + X A + Q = 0.
//
// Bartels-Stewart on the complex Schur form A = U T U^H: with Y = U^H X U and
// F = U^H Q U the equation becomes T^H Y + Y T = -F, which is solved entry by
// entry in forward order since T is upper triangular. Each entry divides by
// conj(T_ii) + T_jj, nonzero whenever A is Hurwitz.

#include "dapi/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <string>

namespace dapi {

struct LyapunovSolution {
  Eigen::MatrixXd X;
  double relative_residual = 0.0;  // ||A^T X + X A + Q|| / ||Q||
};

namespace detail {

inline Eigen::MatrixXd lyapunov_schur_pass(const Eigen::ComplexSchur<Eigen::MatrixXd>& schur,
                                           const Eigen::MatrixXd& Q) {
  using cd = std::complex<double>;
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::Index n = T.rows();
  const Eigen::MatrixXcd F = U.adjoint() * Q.cast<cd>() * U;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);

  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      cd rhs = -F(i, j);
      for (Eigen::Index k = 0; k < i; ++k) rhs -= std::conj(T(k, i)) * Y(k, j);
      for (Eigen::Index k = 0; k < j; ++k) rhs -= Y(i, k) * T(k, j);
      const cd den = std::conj(T(i, i)) + T(j, j);
      if (std::abs(den) == 0.0) throw NumericalError("Lyapunov operator is singular (A has a marginal eigenvalue)");
      Y(i, j) = rhs / den;
    }
  }
  Eigen::MatrixXd X = (U * Y * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

}  // namespace detail

/// Solves A^T X + X A + Q = 0 for symmetric Q. Up to two refinement passes
/// are applied when the residual exceeds `tolerance`.
inline LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                       double tolerance = 1e-9) {
  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols())
    throw std::domain_error("solve_lyapunov: dimension mismatch");
  LyapunovSolution sol;
  const double q_norm = Q.norm();
  if (q_norm == 0.0) {
    sol.X = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    return sol;
  }
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition did not converge");

  auto residual = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd { return A.transpose() * X + X * A + Q; };
  sol.X = detail::lyapunov_schur_pass(schur, Q);
  Eigen::MatrixXd R = residual(sol.X);
  sol.relative_residual = R.norm() / q_norm;
  for (int pass = 0; pass < 2 && sol.relative_residual > tolerance; ++pass) {
    sol.X += detail::lyapunov_schur_pass(schur, R);
    R = residual(sol.X);
    sol.relative_residual = R.norm() / q_norm;
  }
  if (!sol.X.allFinite()) throw NumericalError("Lyapunov solution is not finite");
  return sol;
}

/// Largest real part over the eigenvalues of A, with the eigenvalue itself.
inline std::complex<double> rightmost_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (ev(i).real() > ev(best).real()) best = i;
  return ev(best);
}

}  // namespace dapi

#endif  // DAPI_LYAPUNOV_HPP
