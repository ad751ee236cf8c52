#pragma once

#include "cfpgd/types.hpp"

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

namespace cfpgd {

/// Smallest power of two >= n.
inline Index next_power_of_two(Index n) {
  Index m = 1;
  while (m < n) m *= 2;
  return m;
}

/// Multiplies by a fixed square Toeplitz matrix via circulant embedding.
///
/// The matrix is given by its first column c and first row r (c[0] == r[0]);
/// it is embedded into a circulant of the next power-of-two size >= 2n-1 whose
/// spectrum is cached, so repeated products cost three FFTs of that size.
template <class Scalar>
class ToeplitzMultiplier {
 public:
  ToeplitzMultiplier(const VectorX<Scalar>& first_col, const VectorX<Scalar>& first_row)
      : n_(first_col.size()) {
    if (first_row.size() != n_) {
      throw DomainError("ToeplitzMultiplier: first column/row sizes differ");
    }
    if (n_ == 0) throw DomainError("ToeplitzMultiplier: empty stencil");
    if (first_col[0] != first_row[0]) {
      throw DomainError("ToeplitzMultiplier: first column and row disagree at (0,0)");
    }
    fft_size_ = next_power_of_two(2 * n_ - 1);
    std::vector<std::complex<Scalar>> circulant(fft_size_, std::complex<Scalar>(0));
    for (Index i = 0; i < n_; ++i) circulant[i] = first_col[i];
    for (Index j = 1; j < n_; ++j) circulant[fft_size_ - j] = first_row[j];
    spectrum_.resize(fft_size_);
    Eigen::FFT<Scalar> fft;
    fft.fwd(spectrum_, circulant);
  }

  Index dim() const noexcept { return n_; }

  VectorX<Scalar> apply(const VectorX<Scalar>& v) const {
    if (v.size() != n_) throw DomainError("ToeplitzMultiplier: dimension mismatch");
    std::vector<std::complex<Scalar>> padded(fft_size_, std::complex<Scalar>(0));
    for (Index i = 0; i < n_; ++i) padded[i] = v[i];
    std::vector<std::complex<Scalar>> freq(fft_size_);
    Eigen::FFT<Scalar> fft;
    fft.fwd(freq, padded);
    for (Index k = 0; k < fft_size_; ++k) freq[k] *= spectrum_[k];
    std::vector<std::complex<Scalar>> out(fft_size_);
    fft.inv(out, freq);
    VectorX<Scalar> result(n_);
    for (Index i = 0; i < n_; ++i) result[i] = out[i].real();
    return result;
  }

 private:
  Index n_;
  Index fft_size_;
  std::vector<std::complex<Scalar>> spectrum_;
};

/// One-shot Toeplitz product T v from the first column/row of T.
template <class Scalar>
VectorX<Scalar> toeplitz_matvec(const VectorX<Scalar>& first_col,
                                const VectorX<Scalar>& first_row,
                                const VectorX<Scalar>& v) {
  if (v.size() != first_col.size()) {
    throw DomainError("toeplitz_matvec: vector dimension does not match stencil");
  }
  if (v.size() == 1) {
    if (first_row.size() != 1 || first_col[0] != first_row[0]) {
      throw DomainError("toeplitz_matvec: first column and row disagree at (0,0)");
    }
    return VectorX<Scalar>::Constant(1, first_col[0] * v[0]);
  }
  return ToeplitzMultiplier<Scalar>(first_col, first_row).apply(v);
}

template <class Vec>
struct PcgOutcome {
  Vec x;
  Index iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

/// Preconditioned conjugate gradient on a generic SPD operator.
///
/// Works on any Eigen vector- or matrix-shaped iterate (the Frobenius inner
/// product is used). Starts from zero; residual is recomputed from scratch
/// every 50 iterations to limit recurrence drift, and the returned flag
/// certifies the true residual norm against rel_tol * |b|.
template <class Vec, class ApplyFn, class PrecondFn>
PcgOutcome<Vec> pcg(ApplyFn&& apply_op, PrecondFn&& precond, const Vec& b,
                    double rel_tol, Index max_iterations) {
  using Scalar = typename Vec::Scalar;
  PcgOutcome<Vec> out;
  out.x = Vec::Zero(b.rows(), b.cols());
  const double b_norm = b.norm();
  if (b_norm == 0) {
    out.converged = true;
    return out;
  }
  Vec r = b;
  Vec z = precond(r);
  Vec p = z;
  Scalar rz = r.cwiseProduct(z).sum();
  const double threshold = rel_tol * b_norm;
  for (Index it = 1; it <= max_iterations; ++it) {
    const Vec ap = apply_op(p);
    const Scalar p_ap = p.cwiseProduct(ap).sum();
    if (!(p_ap > Scalar(0))) {
      throw SolverError("pcg: operator is not positive definite", r.norm() / b_norm, it);
    }
    const Scalar alpha = rz / p_ap;
    out.x += alpha * p;
    if (it % 50 == 0) {
      r = b - apply_op(out.x);
    } else {
      r -= alpha * ap;
    }
    out.iterations = it;
    double res = r.norm();
    if (res <= threshold) {
      r = b - apply_op(out.x);
      res = r.norm();
      if (res <= threshold) {
        out.relative_residual = res / b_norm;
        out.converged = true;
        return out;
      }
    }
    out.relative_residual = res / b_norm;
    z = precond(r);
    const Scalar rz_next = r.cwiseProduct(z).sum();
    const Scalar beta = rz_next / rz;
    p = z + beta * p;
    rz = rz_next;
  }
  return out;
}

template <class Scalar>
struct SpdSolveOptions {
  Scalar rel_tol = Scalar(1e-10);
  Index max_iterations = 0;  // 0: defaults to 10 * dimension
  bool jacobi = true;
  Index direct_threshold = 64;  // dense Cholesky below this dimension
};

template <class Scalar>
struct SpdSolveInfo {
  VectorX<Scalar> x;
  Index iterations = 0;
  Scalar relative_residual = Scalar(0);
  bool direct = false;
};

/// Max-norm symmetry spot check; throws on asymmetric input.
template <class Scalar>
void require_symmetric(const SparseMatrixX<Scalar>& S, Scalar rel_tol = Scalar(1e-12)) {
  if (S.rows() != S.cols()) throw DomainError("require_symmetric: matrix not square");
  Scalar max_abs = Scalar(0);
  for (Index k = 0; k < S.outerSize(); ++k) {
    for (typename SparseMatrixX<Scalar>::InnerIterator it(S, k); it; ++it) {
      max_abs = std::max(max_abs, std::abs(it.value()));
    }
  }
  SparseMatrixX<Scalar> diff = SparseMatrixX<Scalar>(S.transpose()) - S;
  Scalar max_diff = Scalar(0);
  for (Index k = 0; k < diff.outerSize(); ++k) {
    for (typename SparseMatrixX<Scalar>::InnerIterator it(diff, k); it; ++it) {
      max_diff = std::max(max_diff, std::abs(it.value()));
    }
  }
  if (max_diff > rel_tol * std::max(max_abs, Scalar(1e-300))) {
    throw DomainError("require_symmetric: matrix fails the symmetry spot-check");
  }
}

/// Solves S x = b for symmetric positive-definite S.
///
/// Small systems go through a dense Cholesky factorization; larger ones use
/// Jacobi-preconditioned conjugate gradient started from zero, so the result
/// is deterministic for fixed inputs.
template <class Scalar>
SpdSolveInfo<Scalar> spd_solve_info(const SparseMatrixX<Scalar>& S,
                                    const VectorX<Scalar>& b,
                                    const SpdSolveOptions<Scalar>& opts = {}) {
  if (S.rows() != b.size()) throw DomainError("spd_solve: dimension mismatch");
  require_symmetric(S);
  SpdSolveInfo<Scalar> info;
  if (S.rows() < opts.direct_threshold) {
    const MatrixX<Scalar> dense(S);
    Eigen::LLT<MatrixX<Scalar>> llt(dense);
    if (llt.info() != Eigen::Success) {
      throw SolverError("spd_solve: dense Cholesky failed (matrix not SPD)", 0.0, 0);
    }
    info.x = llt.solve(b);
    info.direct = true;
    const Scalar b_norm = b.norm();
    info.relative_residual =
        b_norm > Scalar(0) ? Scalar((S * info.x - b).norm() / b_norm) : Scalar(0);
    return info;
  }
  const Index max_it = opts.max_iterations > 0 ? opts.max_iterations : 10 * S.rows();
  const VectorX<Scalar> diag = S.diagonal();
  if ((diag.array() <= Scalar(0)).any()) {
    throw SolverError("spd_solve: nonpositive diagonal entry (matrix not SPD)", 0.0, 0);
  }
  auto apply = [&](const VectorX<Scalar>& v) -> VectorX<Scalar> { return S * v; };
  PcgOutcome<VectorX<Scalar>> out;
  if (opts.jacobi) {
    auto prec = [&](const VectorX<Scalar>& r) -> VectorX<Scalar> {
      return r.cwiseQuotient(diag);
    };
    out = pcg(apply, prec, b, double(opts.rel_tol), max_it);
  } else {
    auto prec = [](const VectorX<Scalar>& r) -> VectorX<Scalar> { return r; };
    out = pcg(apply, prec, b, double(opts.rel_tol), max_it);
  }
  if (!out.converged) {
    throw SolverError("spd_solve: conjugate gradient did not converge",
                      out.relative_residual, out.iterations);
  }
  info.x = std::move(out.x);
  info.iterations = out.iterations;
  info.relative_residual = Scalar(out.relative_residual);
  return info;
}

template <class Scalar>
VectorX<Scalar> spd_solve(const SparseMatrixX<Scalar>& S, const VectorX<Scalar>& b,
                          const SpdSolveOptions<Scalar>& opts = {}) {
  return spd_solve_info(S, b, opts).x;
}

}  // namespace cfpgd
