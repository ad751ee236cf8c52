#pragma once

#include "cfpgd/assembly.hpp"
#include "cfpgd/kronecker.hpp"
#include "cfpgd/linalg.hpp"
#include "cfpgd/lowrank.hpp"
#include "cfpgd/spaces.hpp"
#include "cfpgd/types.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace cfpgd {

enum class ProblemKind { Poisson2D, SpaceTime };
enum class Discretization { Fem, Grunwald };
enum class LoadKind { Constant, SeparablePolynomial, ManufacturedRankOne };

/// Description of one of the two model problems.
///
/// Poisson2D lives on the unit square with fractional orders on both axes.
/// SpaceTime couples a fractional space axis on (0,1) with a classical
/// (alpha = 1) time axis on (0,T), Dirichlet at both time ends; the energy is
/// the mass-weighted Kronecker sum of the two 1-D pairs in both cases.
template <class Scalar>
struct ProblemSpec {
  ProblemKind kind = ProblemKind::Poisson2D;
  Discretization discretization = Discretization::Fem;
  Scalar alpha_x = Scalar(0.5);
  Scalar alpha_y_or_t = Scalar(0.5);  // must be 1 for SpaceTime
  Index n_x = 32;
  Index n_y = 32;
  Scalar time_horizon = Scalar(1);  // T, SpaceTime only
  Scalar grading_x = Scalar(0);     // 0: default (2 for fractional FEM axes, else 1)
  Scalar grading_y = Scalar(0);
  LoadKind load = LoadKind::Constant;
  Scalar load_value = Scalar(1);
  Scalar load_exponent_x = Scalar(1);  // SeparablePolynomial: f = value * x^a * y^b
  Scalar load_exponent_y = Scalar(1);
  StencilChoice stencil;
};

template <class Scalar>
struct BuiltProblem {
  OperatorPair<Scalar> x;  // first coordinate (space)
  OperatorPair<Scalar> y;  // second coordinate (y, or time)
  LoadFactors<Scalar> load;
};

/// Two-term separable load whose discrete solution is exactly p* (x) q*.
template <class Scalar>
LoadFactors<Scalar> manufactured_rank_one_load(const OperatorPair<Scalar>& x_ops,
                                               const OperatorPair<Scalar>& y_ops,
                                               const VectorX<Scalar>& p_star,
                                               const VectorX<Scalar>& q_star) {
  if (p_star.isZero(Scalar(0)) || q_star.isZero(Scalar(0))) {
    throw DomainError("manufactured_rank_one_load: factors must be nonzero");
  }
  if (p_star.size() != x_ops.dim() || q_star.size() != y_ops.dim()) {
    throw DomainError("manufactured_rank_one_load: dimension mismatch");
  }
  LoadFactors<Scalar> load;
  load.terms.push_back({x_ops.A * p_star, y_ops.M * q_star});
  load.terms.push_back({x_ops.M * p_star, y_ops.A * q_star});
  return load;
}

namespace detail {

template <class Scalar>
Scalar resolve_grading(Scalar requested, Scalar alpha, Discretization disc) {
  if (requested == Scalar(0)) {
    return (disc == Discretization::Fem && alpha < Scalar(1)) ? Scalar(2) : Scalar(1);
  }
  if (disc == Discretization::Grunwald && requested != Scalar(1)) {
    throw DomainError("build_problem: Gruenwald discretization requires a uniform mesh");
  }
  return requested;
}

template <class Scalar>
OperatorPair<Scalar> build_axis(Scalar alpha, Scalar length, Index n, Scalar grading,
                                char label, Discretization disc, const StencilChoice& stencil) {
  const FractionalOrder<Scalar> order(alpha);
  const Scalar gamma = resolve_grading(grading, alpha, disc);
  Mesh1D<Scalar> mesh = gamma == Scalar(1) ? make_uniform_mesh(length, n)
                                           : make_graded_mesh(length, n, gamma);
  const FractionalInterval<Scalar> interval(order, std::move(mesh), label);
  if (disc == Discretization::Fem) return assemble_fem_pair(interval);
  return grunwald_energy_pair(assemble_grunwald_operator(interval, stencil), interval);
}

template <class Scalar>
VectorX<Scalar> sine_samples(const FractionalInterval<Scalar>& interval) {
  const Mesh1D<Scalar>& mesh = interval.mesh();
  VectorX<Scalar> v(mesh.interior_count());
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = std::sin(std::numbers::pi_v<Scalar> * mesh.node(i + 1) / mesh.length());
  }
  return v;
}

}  // namespace detail

template <class Scalar>
BuiltProblem<Scalar> build_problem(const ProblemSpec<Scalar>& spec) {
  if (spec.n_x < 2 || spec.n_y < 2) throw DomainError("build_problem: need n >= 2 per axis");
  const bool spacetime = spec.kind == ProblemKind::SpaceTime;
  if (spacetime && spec.alpha_y_or_t != Scalar(1)) {
    throw DomainError("build_problem: the time axis requires alpha = 1");
  }
  if (spacetime && !(spec.time_horizon > Scalar(0))) {
    throw DomainError("build_problem: time horizon must be positive");
  }

  BuiltProblem<Scalar> built{
      detail::build_axis(spec.alpha_x, Scalar(1), spec.n_x, spec.grading_x, 'x',
                         spec.discretization, spec.stencil),
      detail::build_axis(spec.alpha_y_or_t, spacetime ? spec.time_horizon : Scalar(1),
                         spec.n_y, spec.grading_y, spacetime ? 't' : 'y',
                         spec.discretization, spec.stencil),
      {}};

  switch (spec.load) {
    case LoadKind::Constant: {
      const Scalar value = spec.load_value;
      built.load.terms.push_back(
          {assemble_load_factor(built.x.interval, [value](Scalar) { return value; }),
           assemble_load_factor(built.y.interval, [](Scalar) { return Scalar(1); })});
      break;
    }
    case LoadKind::SeparablePolynomial: {
      const Scalar value = spec.load_value;
      const Scalar ax = spec.load_exponent_x;
      const Scalar ay = spec.load_exponent_y;
      built.load.terms.push_back(
          {assemble_load_factor(built.x.interval,
                                [value, ax](Scalar s) { return value * std::pow(s, ax); }),
           assemble_load_factor(built.y.interval,
                                [ay](Scalar s) { return std::pow(s, ay); })});
      break;
    }
    case LoadKind::ManufacturedRankOne: {
      built.load = manufactured_rank_one_load(built.x, built.y,
                                              detail::sine_samples(built.x.interval),
                                              detail::sine_samples(built.y.interval));
      break;
    }
  }
  built.load.validate();
  return built;
}

/// Ground-truth Galerkin solution of K vec(U) = vec(F) at desk scale
/// (n_x * n_y <= 1e4): dense Cholesky when the operator may be materialized,
/// tight Kronecker CG otherwise.
template <class Scalar>
MatrixX<Scalar> reference_solution_dense(const OperatorPair<Scalar>& x_ops,
                                         const OperatorPair<Scalar>& y_ops,
                                         const LoadFactors<Scalar>& load) {
  load.validate();
  const Index nx = x_ops.dim();
  const Index ny = y_ops.dim();
  if (nx * ny > 10000) {
    throw DomainError("reference_solution_dense: beyond desk scale (n_x n_y > 1e4)");
  }
  const KroneckerSumOperator<Scalar> K(x_ops, y_ops);
  const MatrixX<Scalar> F = load.dense();
  if (nx * ny <= 4096) {
    const MatrixX<Scalar> dense = K.dense();
    Eigen::LLT<MatrixX<Scalar>> llt(dense);
    if (llt.info() != Eigen::Success) {
      throw SolverError("reference_solution_dense: operator is not SPD", 0.0, 0);
    }
    VectorX<Scalar> rhs(nx * ny);
    for (Index ix = 0; ix < nx; ++ix) {
      for (Index iy = 0; iy < ny; ++iy) rhs[ix * ny + iy] = F(ix, iy);
    }
    const VectorX<Scalar> sol = llt.solve(rhs);
    MatrixX<Scalar> U(nx, ny);
    for (Index ix = 0; ix < nx; ++ix) {
      for (Index iy = 0; iy < ny; ++iy) U(ix, iy) = sol[ix * ny + iy];
    }
    return U;
  }
  const MatrixX<Scalar> diag = K.diagonal();
  auto apply = [&](const MatrixX<Scalar>& U) { return K.apply(U); };
  auto prec = [&](const MatrixX<Scalar>& r) -> MatrixX<Scalar> { return r.cwiseQuotient(diag); };
  const PcgOutcome<MatrixX<Scalar>> out = pcg(apply, prec, F, 1e-13, 50 * nx * ny);
  if (!out.converged) {
    throw SolverError("reference_solution_dense: Kronecker CG did not converge",
                      out.relative_residual, out.iterations);
  }
  return out.x;
}

}  // namespace cfpgd
