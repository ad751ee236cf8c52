#pragma once

#include "cfpgd/linalg.hpp"
#include "cfpgd/quadrature.hpp"
#include "cfpgd/spaces.hpp"
#include "cfpgd/types.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace cfpgd {

enum class StructureTag { Tridiagonal, Dense, ToeplitzProduct };

/// Stiffness/mass pair for one coordinate, over interior degrees of freedom.
template <class Scalar>
struct OperatorPair {
  SparseMatrixX<Scalar> A;  // weighted stiffness
  SparseMatrixX<Scalar> M;  // P1 mass
  StructureTag structure = StructureTag::Dense;
  FractionalInterval<Scalar> interval;

  Index dim() const noexcept { return A.rows(); }
};

/// Interior block of the P1 mass matrix: element contribution (h/6)[[2,1],[1,2]].
template <class Scalar>
SparseMatrixX<Scalar> p1_mass_matrix(const Mesh1D<Scalar>& mesh) {
  const Index n_dof = mesh.interior_count();
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(3 * n_dof);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Scalar h = mesh.element_length(e);
    const Index left = e - 1;       // interior dof index of node e
    const Index right = e;          // interior dof index of node e+1
    const bool left_in = e >= 1;
    const bool right_in = e + 1 <= mesh.element_count() - 1;
    if (left_in) triplets.emplace_back(left, left, h / Scalar(3));
    if (right_in) triplets.emplace_back(right, right, h / Scalar(3));
    if (left_in && right_in) {
      triplets.emplace_back(left, right, h / Scalar(6));
      triplets.emplace_back(right, left, h / Scalar(6));
    }
  }
  SparseMatrixX<Scalar> M(n_dof, n_dof);
  M.setFromTriplets(triplets.begin(), triplets.end());
  return M;
}

/// Weighted P1 stiffness and mass matrices on the interval.
///
/// The element integral of the weight x^{2(1-alpha)} has the exact
/// antiderivative x^beta / beta with beta = 3 - 2 alpha, so the stiffness
/// needs no quadrature; the contribution of element [x_e, x_{e+1}] is
/// (W_e / h_e^2) [[1,-1],[-1,1]] with W_e = (x_{e+1}^beta - x_e^beta)/beta.
template <class Scalar>
OperatorPair<Scalar> assemble_fem_pair(const FractionalInterval<Scalar>& interval) {
  const Mesh1D<Scalar>& mesh = interval.mesh();
  const Index n_dof = mesh.interior_count();
  if (n_dof < 1) throw DomainError("assemble_fem_pair: no interior degrees of freedom");

  const bool classical = interval.order().is_classical();
  const Scalar beta = Scalar(3) - Scalar(2) * interval.order().alpha();

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(3 * n_dof);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Scalar h = mesh.element_length(e);
    const Scalar w = classical
                         ? h
                         : (std::pow(mesh.node(e + 1), beta) - std::pow(mesh.node(e), beta)) / beta;
    const Scalar k = w / (h * h);
    const Index left = e - 1;
    const Index right = e;
    const bool left_in = e >= 1;
    const bool right_in = e + 1 <= mesh.element_count() - 1;
    if (left_in) triplets.emplace_back(left, left, k);
    if (right_in) triplets.emplace_back(right, right, k);
    if (left_in && right_in) {
      triplets.emplace_back(left, right, -k);
      triplets.emplace_back(right, left, -k);
    }
  }
  SparseMatrixX<Scalar> A(n_dof, n_dof);
  A.setFromTriplets(triplets.begin(), triplets.end());

  return OperatorPair<Scalar>{std::move(A), p1_mass_matrix(mesh),
                              StructureTag::Tridiagonal, interval};
}

/// Choice of translation-invariant difference stencil for the Gruenwald path.
struct StencilChoice {
  enum class Kind { BackwardDifference, GrunwaldLetnikov };
  Kind kind = Kind::BackwardDifference;
  Index length = 2;

  static StencilChoice backward_difference() { return {}; }

  /// Coefficients (-1)^k binom(alpha, k) / h^alpha, truncated at `length`.
  /// Experimental alternative; the two-point backward difference is the
  /// consistent default for the weighted first derivative.
  static StencilChoice grunwald_letnikov(Index length) {
    if (length < 2 || length > 64) {
      throw DomainError("StencilChoice: Gruenwald-Letnikov length must be in [2, 64]");
    }
    return {Kind::GrunwaldLetnikov, length};
  }
};

/// Discrete conformable derivative G = W T on interior nodes of a uniform mesh:
/// T is a lower-triangular Toeplitz difference stencil with Dirichlet
/// truncation and W = diag(x_i^{1-alpha}).
template <class Scalar>
struct GrunwaldOperator {
  VectorX<Scalar> stencil;       // first column of T; T(i,j) = stencil[i-j]
  VectorX<Scalar> node_weights;  // x_i^{1-alpha} over interior nodes
  Scalar h = Scalar(0);

  Index dim() const noexcept { return node_weights.size(); }

  SparseMatrixX<Scalar> sparse_T() const {
    const Index n = dim();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < stencil.size() && k <= i; ++k) {
        triplets.emplace_back(i, i - k, stencil[k]);
      }
    }
    SparseMatrixX<Scalar> T(n, n);
    T.setFromTriplets(triplets.begin(), triplets.end());
    return T;
  }

  /// G v = W (T v); long stencils route through the FFT Toeplitz product.
  VectorX<Scalar> apply(const VectorX<Scalar>& v) const {
    const Index n = dim();
    if (v.size() != n) throw DomainError("GrunwaldOperator: dimension mismatch");
    VectorX<Scalar> tv;
    if (stencil.size() >= 16 && n >= stencil.size()) {
      VectorX<Scalar> col = VectorX<Scalar>::Zero(n);
      col.head(std::min(stencil.size(), n)) = stencil.head(std::min(stencil.size(), n));
      VectorX<Scalar> row = VectorX<Scalar>::Zero(n);
      row[0] = stencil[0];
      tv = toeplitz_matvec(col, row, v);
    } else {
      tv = VectorX<Scalar>::Zero(n);
      for (Index i = 0; i < n; ++i) {
        Scalar sum = Scalar(0);
        for (Index k = 0; k < stencil.size() && k <= i; ++k) sum += stencil[k] * v[i - k];
        tv[i] = sum;
      }
    }
    return node_weights.asDiagonal() * tv;
  }
};

template <class Scalar>
GrunwaldOperator<Scalar> assemble_grunwald_operator(const FractionalInterval<Scalar>& interval,
                                                    const StencilChoice& choice = {}) {
  const Mesh1D<Scalar>& mesh = interval.mesh();
  if (!mesh.is_uniform()) {
    throw DomainError("assemble_grunwald_operator: requires a uniform mesh");
  }
  if (mesh.interior_count() < 1) {
    throw DomainError("assemble_grunwald_operator: no interior degrees of freedom");
  }
  const Scalar h = mesh.length() / Scalar(mesh.element_count());
  const Scalar alpha = interval.order().alpha();

  GrunwaldOperator<Scalar> op;
  op.h = h;
  if (choice.kind == StencilChoice::Kind::BackwardDifference) {
    op.stencil.resize(2);
    op.stencil[0] = Scalar(1) / h;
    op.stencil[1] = Scalar(-1) / h;
  } else {
    const Index len = std::min(choice.length, mesh.interior_count());
    op.stencil.resize(len);
    const Scalar scale = std::pow(h, -alpha);
    Scalar g = Scalar(1);
    op.stencil[0] = scale;
    for (Index k = 1; k < len; ++k) {
      g *= (Scalar(k - 1) - alpha) / Scalar(k);
      op.stencil[k] = scale * g;
    }
  }

  op.node_weights.resize(mesh.interior_count());
  for (Index i = 0; i < mesh.interior_count(); ++i) {
    const Scalar x = mesh.node(i + 1);
    op.node_weights[i] =
        interval.order().is_classical() ? Scalar(1) : std::pow(x, interval.order().weight_exponent());
  }
  return op;
}

/// Energy pair from the Gruenwald derivative: A = h T' W^2 T (a Riemann-sum
/// discretization of the squared-derivative energy, on the same scale as the
/// FEM stiffness), with the standard P1 mass matrix.
template <class Scalar>
OperatorPair<Scalar> grunwald_energy_pair(const GrunwaldOperator<Scalar>& G,
                                          const FractionalInterval<Scalar>& interval) {
  const Index n = G.dim();
  if (interval.interior_dof_count() != n) {
    throw DomainError("grunwald_energy_pair: operator does not match interval");
  }
  const Index band = G.stencil.size() - 1;
  std::vector<Eigen::Triplet<Scalar>> triplets;
  // Entry (i,j) = h sum_k T(k,i) w_k^2 T(k,j); assembled for i <= j and
  // mirrored so A is symmetric to the last bit.
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j <= std::min(n - 1, i + band); ++j) {
      Scalar sum = Scalar(0);
      for (Index k = j; k <= std::min(n - 1, i + band); ++k) {
        const Scalar w = G.node_weights[k];
        sum += G.stencil[k - i] * G.stencil[k - j] * w * w;
      }
      const Scalar value = G.h * sum;
      triplets.emplace_back(i, j, value);
      if (i != j) triplets.emplace_back(j, i, value);
    }
  }
  SparseMatrixX<Scalar> A(n, n);
  A.setFromTriplets(triplets.begin(), triplets.end());
  return OperatorPair<Scalar>{std::move(A), p1_mass_matrix(interval.mesh()),
                              StructureTag::ToeplitzProduct, interval};
}

/// Load-factor vector (F)_i = integral of f against the i-th interior hat.
///
/// Fixed 5-point Gauss-Legendre per element, doubled on the first element of
/// a fractional coordinate.
template <class Scalar, class F>
VectorX<Scalar> assemble_load_factor(const FractionalInterval<Scalar>& interval, F&& f) {
  const Mesh1D<Scalar>& mesh = interval.mesh();
  const GaussLegendreRule<Scalar> base = gauss_legendre<Scalar>(5);
  const GaussLegendreRule<Scalar> refined = gauss_legendre<Scalar>(10);
  const bool fractional = !interval.order().is_classical();

  VectorX<Scalar> load = VectorX<Scalar>::Zero(mesh.interior_count());
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const GaussLegendreRule<Scalar>& rule = (fractional && e == 0) ? refined : base;
    const Scalar a = mesh.node(e);
    const Scalar b = mesh.node(e + 1);
    const Scalar h = b - a;
    if (e >= 1) {
      load[e - 1] += integrate(rule, a, b,
                               [&](Scalar x) { return f(x) * (b - x) / h; });
    }
    if (e + 1 <= mesh.element_count() - 1) {
      load[e] += integrate(rule, a, b,
                           [&](Scalar x) { return f(x) * (x - a) / h; });
    }
  }
  return load;
}

}  // namespace cfpgd
