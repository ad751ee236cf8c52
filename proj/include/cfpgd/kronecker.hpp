#pragma once

#include "cfpgd/assembly.hpp"
#include "cfpgd/linalg.hpp"
#include "cfpgd/types.hpp"

#include <algorithm>
#include <cmath>

namespace cfpgd {

/// Discrete energy operator K = A_x (x) M_y + M_x (x) A_y acting on
/// coefficient matrices U (n_x rows, n_y columns): K U = A_x U M_y + M_x U A_y.
///
/// The operator is applied in reshaped matrix form and is never materialized
/// beyond desk scale; `dense()` refuses n_x * n_y > 4096.
template <class Scalar>
class KroneckerSumOperator {
 public:
  KroneckerSumOperator(const OperatorPair<Scalar>& x_ops, const OperatorPair<Scalar>& y_ops)
      : x_(&x_ops), y_(&y_ops) {}

  Index rows_x() const noexcept { return x_->dim(); }
  Index rows_y() const noexcept { return y_->dim(); }
  const OperatorPair<Scalar>& x_ops() const noexcept { return *x_; }
  const OperatorPair<Scalar>& y_ops() const noexcept { return *y_; }

  MatrixX<Scalar> apply(const MatrixX<Scalar>& U) const {
    if (U.rows() != rows_x() || U.cols() != rows_y()) {
      throw DomainError("KroneckerSumOperator: coefficient matrix has wrong shape");
    }
    return (x_->A * U) * y_->M + (x_->M * U) * y_->A;
  }

  /// Diagonal of K as an n_x-by-n_y array, for Jacobi preconditioning.
  MatrixX<Scalar> diagonal() const {
    const VectorX<Scalar> ax = x_->A.diagonal();
    const VectorX<Scalar> mx = x_->M.diagonal();
    const VectorX<Scalar> ay = y_->A.diagonal();
    const VectorX<Scalar> my = y_->M.diagonal();
    return ax * my.transpose() + mx * ay.transpose();
  }

  /// Explicit matrix in row-major vec ordering (index = ix * n_y + iy).
  MatrixX<Scalar> dense() const {
    const Index nx = rows_x();
    const Index ny = rows_y();
    if (nx * ny > 4096) {
      throw DomainError("KroneckerSumOperator: refusing to materialize beyond 4096 unknowns");
    }
    const MatrixX<Scalar> Ax(x_->A), Mx(x_->M), Ay(y_->A), My(y_->M);
    MatrixX<Scalar> K(nx * ny, nx * ny);
    for (Index ix = 0; ix < nx; ++ix) {
      for (Index iy = 0; iy < ny; ++iy) {
        for (Index jx = 0; jx < nx; ++jx) {
          for (Index jy = 0; jy < ny; ++jy) {
            K(ix * ny + iy, jx * ny + jy) = Ax(ix, jx) * My(iy, jy) + Mx(ix, jx) * Ay(iy, jy);
          }
        }
      }
    }
    return K;
  }

 private:
  const OperatorPair<Scalar>* x_;
  const OperatorPair<Scalar>* y_;
};

template <class Scalar>
MatrixX<Scalar> kron_sum_matvec(const KroneckerSumOperator<Scalar>& K, const MatrixX<Scalar>& U) {
  return K.apply(U);
}

/// Squared dual norm of a residual coefficient matrix: vec(R)' K^{-1} vec(R),
/// by Jacobi-preconditioned conjugate gradient on the Kronecker-sum operator.
template <class Scalar>
Scalar dual_norm_squared(const KroneckerSumOperator<Scalar>& K, const MatrixX<Scalar>& R,
                         Scalar rel_tol = Scalar(1e-12), Index max_iterations = 0) {
  if (R.rows() != K.rows_x() || R.cols() != K.rows_y()) {
    throw DomainError("dual_norm_squared: residual matrix has wrong shape");
  }
  if (max_iterations == 0) max_iterations = 20 * K.rows_x() * K.rows_y();
  const MatrixX<Scalar> diag = K.diagonal();
  auto apply = [&](const MatrixX<Scalar>& U) { return K.apply(U); };
  auto prec = [&](const MatrixX<Scalar>& r) -> MatrixX<Scalar> { return r.cwiseQuotient(diag); };
  const PcgOutcome<MatrixX<Scalar>> out = pcg(apply, prec, R, double(rel_tol), max_iterations);
  if (!out.converged) {
    throw SolverError("dual_norm_squared: conjugate gradient did not converge",
                      out.relative_residual, out.iterations);
  }
  return std::max(R.cwiseProduct(out.x).sum(), Scalar(0));
}

}  // namespace cfpgd
