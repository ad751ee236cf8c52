#pragma once

#include "cfpgd/assembly.hpp"
#include "cfpgd/kronecker.hpp"
#include "cfpgd/lowrank.hpp"
#include "cfpgd/types.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace cfpgd {

enum class AlsInit { LoadFactor, RandomSeeded, Ones };

template <class Scalar>
struct AlsConfig {
  int max_sweeps = 20;
  Scalar rq_rel_improvement_tol = Scalar(1e-6);
  AlsInit init = AlsInit::LoadFactor;
  bool renormalize_factors = true;
  std::uint64_t seed = 0x5EED;

  void validate() const {
    if (max_sweeps < 1) throw DomainError("AlsConfig: max_sweeps must be >= 1");
    if (!(rq_rel_improvement_tol > Scalar(0))) {
      throw DomainError("AlsConfig: improvement tolerance must be positive");
    }
  }
};

template <class Scalar>
struct GreedyConfig {
  Scalar eps = Scalar(1e-4);
  int max_modes = 100;
  Scalar absolute_floor = Scalar(1e-28);
  bool orthogonalize = false;

  void validate() const {
    if (!(eps > Scalar(0)) || !(eps < Scalar(1))) {
      throw DomainError("GreedyConfig: eps must lie in (0, 1)");
    }
    if (max_modes < 1) throw DomainError("GreedyConfig: max_modes must be >= 1");
    if (!(absolute_floor > Scalar(0))) {
      throw DomainError("GreedyConfig: absolute floor must be positive");
    }
  }
};

struct DiagnosticsFlags {
  bool theta = false;      // record the achieved residual/cone cosine
  bool dual_norm = false;  // record |r_N|^2 in the dual norm (one K-solve per step)
};

template <class Scalar>
struct IterationRecord {
  int mode_index = 0;          // 1-based index of the accepted mode
  Scalar delta_energy = 0;     // realized decrease <r,w>^2 / a(w,w)
  Scalar rayleigh_quotient = 0;
  Scalar tau = 0;
  int sweeps = 0;
  std::optional<Scalar> theta_hat;
  std::optional<Scalar> energy_error_sq;  // |r|^2 before this mode was added
};

enum class GreedyStatus { Converged, Stagnated, MaxModes };

inline const char* to_string(GreedyStatus status) {
  switch (status) {
    case GreedyStatus::Converged: return "converged";
    case GreedyStatus::Stagnated: return "stagnated";
    case GreedyStatus::MaxModes: return "max_modes";
  }
  return "unknown";
}

template <class Scalar>
struct AlsOutcome {
  RankOneMode<Scalar> mode;
  Scalar rayleigh_quotient = Scalar(0);
  int sweeps = 0;
  bool zero_residual = false;
  int monotonicity_violations = 0;
  std::vector<Scalar> quotient_trace;  // after every substep, nondecreasing
  int solves_x = 0;
  int solves_y = 0;
};

namespace detail {

template <class Scalar>
VectorX<Scalar> mass_normalized(VectorX<Scalar> v, const SparseMatrixX<Scalar>& M) {
  const Scalar norm = std::sqrt(v.dot(M * v));
  if (!(norm > Scalar(0))) throw DomainError("mass_normalized: zero factor");
  Scalar sign = Scalar(1);
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] != Scalar(0)) {
      sign = v[i] > Scalar(0) ? Scalar(1) : Scalar(-1);
      break;
    }
  }
  v *= sign / norm;
  return v;
}

template <class Scalar>
VectorX<Scalar> random_factor(Index n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VectorX<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v[i] = Scalar(dist(engine));
  return v;
}

template <class Scalar>
Scalar rayleigh_quotient(const ResidualContraction<Scalar>& r, const VectorX<Scalar>& p,
                         const VectorX<Scalar>& q) {
  const Scalar num = residual_apply(r, p, q);
  const Scalar den = rank_one_energy(RankOneMode<Scalar>{p, q, Scalar(1)}, *r.x_ops, *r.y_ops);
  return num * num / den;
}

}  // namespace detail

/// Inner loop: alternating SPD solves that maximize the Rayleigh quotient
/// <r, p(x)q>^2 / a(p(x)q, p(x)q) to stationarity. Each substep maximizes the
/// quotient over its own factor, so the recorded per-substep quotient trace is
/// nondecreasing; decreases beyond a 1e-12 relative slack are counted as
/// violations.
template <class Scalar>
AlsOutcome<Scalar> als_maximize(const ResidualContraction<Scalar>& r,
                                const AlsConfig<Scalar>& cfg, std::uint64_t salt = 0) {
  cfg.validate();
  const OperatorPair<Scalar>& xo = *r.x_ops;
  const OperatorPair<Scalar>& yo = *r.y_ops;
  const std::uint64_t mixed_seed = cfg.seed + 0x9E3779B97F4A7C15ULL * (salt + 1);

  AlsOutcome<Scalar> out;

  // Initial y-factor.
  VectorX<Scalar> q;
  switch (cfg.init) {
    case AlsInit::Ones:
      q = VectorX<Scalar>::Ones(yo.dim());
      break;
    case AlsInit::RandomSeeded:
      q = detail::random_factor<Scalar>(yo.dim(), mixed_seed);
      break;
    case AlsInit::LoadFactor: {
      Index best = 0;
      double best_norm = -1;
      for (Index t = 0; t < Index(r.load->terms.size()); ++t) {
        const double norm =
            double(r.load->terms[t].fx.norm()) * double(r.load->terms[t].fy.norm());
        if (norm > best_norm) {
          best_norm = norm;
          best = t;
        }
      }
      q = r.load->terms[best].fy;
      if (q.isZero(Scalar(0))) q = detail::random_factor<Scalar>(yo.dim(), mixed_seed);
      break;
    }
  }
  q = detail::mass_normalized(q, yo.M);

  // Zero-residual detection: the initial x-contraction, a random retry, and
  // the y-contraction of a fixed factor must all vanish.
  VectorX<Scalar> b = residual_partial_x(r, q);
  VectorX<Scalar> p;
  bool have_p = false;
  if (b.isZero(Scalar(0))) {
    q = detail::mass_normalized(detail::random_factor<Scalar>(yo.dim(), mixed_seed ^ 0x5bd1e995ULL),
                                yo.M);
    b = residual_partial_x(r, q);
  }
  if (b.isZero(Scalar(0))) {
    const VectorX<Scalar> p0 =
        detail::mass_normalized(VectorX<Scalar>(VectorX<Scalar>::Ones(xo.dim())), xo.M);
    const VectorX<Scalar> c = residual_partial_y(r, p0);
    if (c.isZero(Scalar(0))) {
      out.zero_residual = true;
      return out;
    }
    // The residual is invisible along q but not along p0: bootstrap q from a
    // y-substep and restart.
    const Scalar pmxp = p0.dot(xo.M * p0);
    const Scalar paxp = p0.dot(xo.A * p0);
    SparseMatrixX<Scalar> sy = yo.A * pmxp + yo.M * paxp;
    q = detail::mass_normalized(spd_solve(sy, c), yo.M);
    ++out.solves_y;
    b = residual_partial_x(r, q);
    if (b.isZero(Scalar(0))) {
      throw SolverError("als_maximize: residual contraction is degenerate", 0.0, 0);
    }
  }

  Scalar prev_sweep_rq = Scalar(0);
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    if (sweep > 1) b = residual_partial_x(r, q);
    const Scalar qmyq = q.dot(yo.M * q);
    const Scalar qayq = q.dot(yo.A * q);
    SparseMatrixX<Scalar> sx = xo.A * qmyq + xo.M * qayq;
    VectorX<Scalar> p_new = spd_solve(sx, b);
    ++out.solves_x;
    if (p_new.isZero(Scalar(0))) break;
    p = cfg.renormalize_factors ? detail::mass_normalized(std::move(p_new), xo.M)
                                : std::move(p_new);
    have_p = true;
    out.quotient_trace.push_back(detail::rayleigh_quotient(r, p, q));

    const VectorX<Scalar> c = residual_partial_y(r, p);
    const Scalar pmxp = p.dot(xo.M * p);
    const Scalar paxp = p.dot(xo.A * p);
    SparseMatrixX<Scalar> sy = yo.A * pmxp + yo.M * paxp;
    VectorX<Scalar> q_new = spd_solve(sy, c);
    ++out.solves_y;
    if (q_new.isZero(Scalar(0))) break;
    q = cfg.renormalize_factors ? detail::mass_normalized(std::move(q_new), yo.M)
                                : std::move(q_new);
    out.quotient_trace.push_back(detail::rayleigh_quotient(r, p, q));
    out.sweeps = sweep;

    const Scalar sweep_rq = out.quotient_trace.back();
    if (sweep > 1) {
      const Scalar improvement = sweep_rq - prev_sweep_rq;
      if (improvement <= cfg.rq_rel_improvement_tol * std::abs(prev_sweep_rq)) break;
    }
    prev_sweep_rq = sweep_rq;
  }

  if (!have_p) throw SolverError("als_maximize: no usable substep", 0.0, 0);

  for (std::size_t i = 1; i < out.quotient_trace.size(); ++i) {
    const Scalar before = out.quotient_trace[i - 1];
    const Scalar after = out.quotient_trace[i];
    const Scalar slack =
        Scalar(1e-12) * std::max(std::abs(before), std::abs(after));
    if (after < before - slack) ++out.monotonicity_violations;
  }

  out.mode = RankOneMode<Scalar>{std::move(p), std::move(q), Scalar(1)};
  out.rayleigh_quotient = out.quotient_trace.back();
  return out;
}

/// Exact line-search scalar tau = <r, w> / a(w, w) for the mode as a whole.
template <class Scalar>
Scalar line_search_tau(const ResidualContraction<Scalar>& r, const RankOneMode<Scalar>& w) {
  if (w.is_zero()) throw DomainError("line_search_tau: zero mode");
  const Scalar rw = w.scale * residual_apply(r, w.p, w.q);
  const Scalar aww = rank_one_energy(w, *r.x_ops, *r.y_ops);
  return rw / aww;
}

/// Achieved residual/cone cosine: <r,w> / (|r|_dual sqrt(a(w,w))). This is a
/// realized lower bound for the optimal cosine, not the supremum itself.
template <class Scalar>
Scalar estimate_theta(const ResidualContraction<Scalar>& r, const RankOneMode<Scalar>& w,
                      const KroneckerSumOperator<Scalar>& K, Scalar rel_tol = Scalar(1e-12)) {
  if (w.is_zero()) throw DomainError("estimate_theta: zero mode");
  const Scalar dual_sq = dual_norm_squared(K, dense_residual_matrix(r), rel_tol);
  if (!(dual_sq > Scalar(0))) throw DomainError("estimate_theta: zero residual");
  const Scalar rw = w.scale * residual_apply(r, w.p, w.q);
  const Scalar aww = rank_one_energy(w, *r.x_ops, *r.y_ops);
  return std::abs(rw) / std::sqrt(dual_sq * aww);
}

template <class Scalar>
struct GreedyResult {
  SeparableFunction<Scalar> u;
  std::vector<IterationRecord<Scalar>> records;
  GreedyStatus status = GreedyStatus::Converged;
  int monotonicity_violations = 0;
  std::optional<Scalar> initial_energy_error_sq;  // |r_0|^2, when diagnostics run
  std::optional<Scalar> final_energy_error_sq;    // |r_N|^2 at termination
};

/// Outer greedy loop: u_{N+1} = u_N + tau w with w from the ALS maximization
/// and tau from the exact line search. A candidate whose decrease falls at or
/// below eps^2 a(u_N, u_N) is rejected and the iteration stops (an absolute
/// floor stands in for the right-hand side while u_N = 0). Records carry the
/// decrease, quotient, tau, sweep count and the optional diagnostics.
template <class Scalar>
GreedyResult<Scalar> greedy_solve(const OperatorPair<Scalar>& x_ops,
                                  const OperatorPair<Scalar>& y_ops,
                                  const LoadFactors<Scalar>& load,
                                  const GreedyConfig<Scalar>& cfg,
                                  const AlsConfig<Scalar>& als_cfg,
                                  const DiagnosticsFlags& diagnostics = {}) {
  cfg.validate();
  als_cfg.validate();
  load.validate();

  GreedyResult<Scalar> result{SeparableFunction<Scalar>(x_ops, y_ops), {}, GreedyStatus::MaxModes};
  const bool need_dual = diagnostics.theta || diagnostics.dual_norm;
  const KroneckerSumOperator<Scalar> K(x_ops, y_ops);

  Scalar energy_u = Scalar(0);
  Scalar prev_delta = Scalar(-1);

  for (int step = 1; step <= cfg.max_modes; ++step) {
    try {
      const ResidualContraction<Scalar> r(load, result.u);

      std::optional<Scalar> dual_sq;
      if (need_dual) {
        dual_sq = dual_norm_squared(K, dense_residual_matrix(r));
        if (step == 1) result.initial_energy_error_sq = dual_sq;
      }

      AlsOutcome<Scalar> als = als_maximize(r, als_cfg, std::uint64_t(step));
      if (als.zero_residual) {
        result.status = GreedyStatus::Converged;
        result.final_energy_error_sq = dual_sq;
        return result;
      }
      result.monotonicity_violations += als.monotonicity_violations;

      RankOneMode<Scalar> mode = std::move(als.mode);
      if (cfg.orthogonalize) {
        OrthogonalizeOutcome<Scalar> ortho = orthogonalize_new_mode(mode, result.u);
        if (!ortho.collapsed) {
          mode = als_cfg.renormalize_factors ? renormalize(ortho.mode, x_ops, y_ops)
                                             : ortho.mode;
        }
      }

      Scalar rw = mode.scale * residual_apply(r, mode.p, mode.q);
      if (rw < Scalar(0)) {
        mode.scale = -mode.scale;
        rw = -rw;
      }
      const Scalar aww = rank_one_energy(mode, x_ops, y_ops);
      const Scalar tau = rw / aww;
      const Scalar delta = rw * tau;

      std::optional<Scalar> theta;
      if (diagnostics.theta && dual_sq && *dual_sq > Scalar(0)) {
        theta = rw / std::sqrt(*dual_sq * aww);
      }

      const Scalar threshold =
          energy_u > Scalar(0) ? cfg.eps * cfg.eps * energy_u : cfg.absolute_floor;
      if (delta <= threshold) {
        result.status = GreedyStatus::Converged;
        result.final_energy_error_sq = dual_sq;
        return result;
      }
      if (prev_delta > Scalar(0) && std::abs(delta - prev_delta) <= Scalar(1e-3) * prev_delta &&
          delta <= cfg.eps * energy_u) {
        result.status = GreedyStatus::Stagnated;
        result.final_energy_error_sq = dual_sq;
        return result;
      }

      const Scalar load_w = mode.scale * load.apply(mode.p, mode.q);
      energy_u += Scalar(2) * tau * (load_w - rw) + tau * tau * aww;

      RankOneMode<Scalar> accepted = mode;
      accepted.scale *= tau;
      result.u.append(std::move(accepted));

      IterationRecord<Scalar> record;
      record.mode_index = step;
      record.delta_energy = delta;
      record.rayleigh_quotient = als.rayleigh_quotient;
      record.tau = tau;
      record.sweeps = als.sweeps;
      record.theta_hat = theta;
      if (diagnostics.dual_norm) record.energy_error_sq = dual_sq;
      result.records.push_back(std::move(record));
      prev_delta = delta;
    } catch (const SolverError& err) {
      throw SolverError("greedy step " + std::to_string(step) + ": " + err.what(),
                        err.residual(), err.iterations());
    }
  }

  result.status = GreedyStatus::MaxModes;
  if (need_dual) {
    const ResidualContraction<Scalar> r(load, result.u);
    result.final_energy_error_sq = dual_norm_squared(K, dense_residual_matrix(r));
  }
  return result;
}

}  // namespace cfpgd
