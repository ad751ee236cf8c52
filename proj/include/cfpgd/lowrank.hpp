#pragma once

#include "cfpgd/assembly.hpp"
#include "cfpgd/kronecker.hpp"
#include "cfpgd/types.hpp"

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace cfpgd {

/// One rank-one term scale * p (x) q. After renormalization the factors are
/// unit in their mass inner products and the magnitude (and sign) lives in
/// `scale`.
template <class Scalar>
struct RankOneMode {
  VectorX<Scalar> p;
  VectorX<Scalar> q;
  Scalar scale = Scalar(1);

  bool is_zero() const { return scale == Scalar(0) || p.isZero(Scalar(0)) || q.isZero(Scalar(0)); }
};

/// Separable load: l(p (x) q) = sum_t (fx_t . p)(fy_t . q).
template <class Scalar>
struct LoadFactors {
  struct Term {
    VectorX<Scalar> fx;
    VectorX<Scalar> fy;
  };
  std::vector<Term> terms;

  void validate() const {
    if (terms.empty()) throw DomainError("LoadFactors: no terms");
    for (const Term& t : terms) {
      if (t.fx.size() != terms.front().fx.size() || t.fy.size() != terms.front().fy.size()) {
        throw DomainError("LoadFactors: inconsistent term dimensions");
      }
    }
  }

  Scalar apply(const VectorX<Scalar>& p, const VectorX<Scalar>& q) const {
    Scalar sum = Scalar(0);
    for (const Term& t : terms) sum += t.fx.dot(p) * t.fy.dot(q);
    return sum;
  }

  VectorX<Scalar> partial_x(const VectorX<Scalar>& q) const {
    VectorX<Scalar> out = VectorX<Scalar>::Zero(terms.front().fx.size());
    for (const Term& t : terms) out += t.fx * t.fy.dot(q);
    return out;
  }

  VectorX<Scalar> partial_y(const VectorX<Scalar>& p) const {
    VectorX<Scalar> out = VectorX<Scalar>::Zero(terms.front().fy.size());
    for (const Term& t : terms) out += t.fy * t.fx.dot(p);
    return out;
  }

  bool is_zero() const {
    for (const Term& t : terms) {
      if (!t.fx.isZero(Scalar(0)) && !t.fy.isZero(Scalar(0))) return false;
    }
    return true;
  }

  /// Dense n_x-by-n_y coefficient matrix of the load (test/diagnostic scale).
  MatrixX<Scalar> dense() const {
    MatrixX<Scalar> F = MatrixX<Scalar>::Zero(terms.front().fx.size(), terms.front().fy.size());
    for (const Term& t : terms) F += t.fx * t.fy.transpose();
    return F;
  }
};

/// The iterate u_N = sum_k scale_k p_k (x) q_k. Only the 1-D factors are
/// stored; no full coefficient tensor exists anywhere on this path.
template <class Scalar>
class SeparableFunction {
 public:
  SeparableFunction(const OperatorPair<Scalar>& x_ops, const OperatorPair<Scalar>& y_ops)
      : x_(&x_ops), y_(&y_ops) {}

  const OperatorPair<Scalar>& x_ops() const noexcept { return *x_; }
  const OperatorPair<Scalar>& y_ops() const noexcept { return *y_; }

  const std::vector<RankOneMode<Scalar>>& modes() const noexcept { return modes_; }
  Index rank() const noexcept { return static_cast<Index>(modes_.size()); }

  void append(RankOneMode<Scalar> mode) {
    if (mode.p.size() != x_->dim() || mode.q.size() != y_->dim()) {
      throw DomainError("SeparableFunction: mode dimensions do not match operators");
    }
    modes_.push_back(std::move(mode));
  }

  /// Bytes held by the mode list; affine in rank * (n_x + n_y).
  std::size_t memory_bytes() const {
    std::size_t bytes = modes_.size() * sizeof(RankOneMode<Scalar>);
    for (const RankOneMode<Scalar>& m : modes_) {
      bytes += sizeof(Scalar) * static_cast<std::size_t>(m.p.size() + m.q.size());
    }
    return bytes;
  }

  /// Dense coefficient matrix (test/diagnostic scale only).
  MatrixX<Scalar> dense() const {
    MatrixX<Scalar> U = MatrixX<Scalar>::Zero(x_->dim(), y_->dim());
    for (const RankOneMode<Scalar>& m : modes_) U += m.scale * (m.p * m.q.transpose());
    return U;
  }

 private:
  std::vector<RankOneMode<Scalar>> modes_;
  const OperatorPair<Scalar>* x_;
  const OperatorPair<Scalar>* y_;
};

/// Everything needed to contract the residual r_N = l - A u_N with rank-one
/// test functions using only 1-D vector work.
template <class Scalar>
struct ResidualContraction {
  const LoadFactors<Scalar>* load;
  const SeparableFunction<Scalar>* history;
  const OperatorPair<Scalar>* x_ops;
  const OperatorPair<Scalar>* y_ops;

  ResidualContraction(const LoadFactors<Scalar>& l, const SeparableFunction<Scalar>& u)
      : load(&l), history(&u), x_ops(&u.x_ops()), y_ops(&u.y_ops()) {}
};

/// Discrete energy of a rank-one mode:
/// scale^2 [ (p.A_x p)(q.M_y q) + (p.M_x p)(q.A_y q) ].
template <class Scalar>
Scalar rank_one_energy(const RankOneMode<Scalar>& mode, const OperatorPair<Scalar>& x_ops,
                       const OperatorPair<Scalar>& y_ops) {
  if (mode.is_zero()) throw DomainError("rank_one_energy: zero mode");
  const Scalar paxp = mode.p.dot(x_ops.A * mode.p);
  const Scalar pmxp = mode.p.dot(x_ops.M * mode.p);
  const Scalar qayq = mode.q.dot(y_ops.A * mode.q);
  const Scalar qmyq = mode.q.dot(y_ops.M * mode.q);
  return mode.scale * mode.scale * (paxp * qmyq + pmxp * qayq);
}

/// <r_N, p (x) q>.
template <class Scalar>
Scalar residual_apply(const ResidualContraction<Scalar>& r, const VectorX<Scalar>& p,
                      const VectorX<Scalar>& q) {
  if (p.size() != r.x_ops->dim() || q.size() != r.y_ops->dim()) {
    throw DomainError("residual_apply: dimension mismatch");
  }
  const VectorX<Scalar> axp = r.x_ops->A * p;
  const VectorX<Scalar> mxp = r.x_ops->M * p;
  const VectorX<Scalar> ayq = r.y_ops->A * q;
  const VectorX<Scalar> myq = r.y_ops->M * q;
  Scalar sum = r.load->apply(p, q);
  for (const RankOneMode<Scalar>& m : r.history->modes()) {
    sum -= m.scale * (m.p.dot(axp) * m.q.dot(myq) + m.p.dot(mxp) * m.q.dot(ayq));
  }
  return sum;
}

/// b_q with (b_q . p) = <r_N, p (x) q> for every p. The mode sums are
/// accumulated before the two sparse products, so the cost stays
/// O((N + #terms)(n_x + n_y)).
template <class Scalar>
VectorX<Scalar> residual_partial_x(const ResidualContraction<Scalar>& r,
                                   const VectorX<Scalar>& q) {
  if (q.size() != r.y_ops->dim()) throw DomainError("residual_partial_x: dimension mismatch");
  if (q.isZero(Scalar(0))) throw DomainError("residual_partial_x: zero test factor");
  const VectorX<Scalar> myq = r.y_ops->M * q;
  const VectorX<Scalar> ayq = r.y_ops->A * q;
  VectorX<Scalar> along_a = VectorX<Scalar>::Zero(r.x_ops->dim());
  VectorX<Scalar> along_m = VectorX<Scalar>::Zero(r.x_ops->dim());
  for (const RankOneMode<Scalar>& m : r.history->modes()) {
    along_a += (m.scale * m.q.dot(myq)) * m.p;
    along_m += (m.scale * m.q.dot(ayq)) * m.p;
  }
  return r.load->partial_x(q) - r.x_ops->A * along_a - r.x_ops->M * along_m;
}

/// c_p with (c_p . q) = <r_N, p (x) q> for every q.
template <class Scalar>
VectorX<Scalar> residual_partial_y(const ResidualContraction<Scalar>& r,
                                   const VectorX<Scalar>& p) {
  if (p.size() != r.x_ops->dim()) throw DomainError("residual_partial_y: dimension mismatch");
  if (p.isZero(Scalar(0))) throw DomainError("residual_partial_y: zero test factor");
  const VectorX<Scalar> mxp = r.x_ops->M * p;
  const VectorX<Scalar> axp = r.x_ops->A * p;
  VectorX<Scalar> along_a = VectorX<Scalar>::Zero(r.y_ops->dim());
  VectorX<Scalar> along_m = VectorX<Scalar>::Zero(r.y_ops->dim());
  for (const RankOneMode<Scalar>& m : r.history->modes()) {
    along_a += (m.scale * m.p.dot(mxp)) * m.q;
    along_m += (m.scale * m.p.dot(axp)) * m.q;
  }
  return r.load->partial_y(p) - r.y_ops->A * along_a - r.y_ops->M * along_m;
}

/// Rescales the factors to unit mass norms with the first nonzero entry of
/// each factor positive; the represented tensor is carried unchanged in
/// `scale` (sign included).
template <class Scalar>
RankOneMode<Scalar> renormalize(RankOneMode<Scalar> mode, const OperatorPair<Scalar>& x_ops,
                                const OperatorPair<Scalar>& y_ops) {
  if (mode.is_zero()) throw DomainError("renormalize: zero mode");
  const Scalar np = std::sqrt(mode.p.dot(x_ops.M * mode.p));
  const Scalar nq = std::sqrt(mode.q.dot(y_ops.M * mode.q));
  if (!(np > Scalar(0)) || !(nq > Scalar(0))) {
    throw DomainError("renormalize: factor has zero mass norm");
  }
  auto leading_sign = [](const VectorX<Scalar>& v) {
    for (Index i = 0; i < v.size(); ++i) {
      if (v[i] != Scalar(0)) return v[i] > Scalar(0) ? Scalar(1) : Scalar(-1);
    }
    return Scalar(1);
  };
  const Scalar sp = leading_sign(mode.p);
  const Scalar sq = leading_sign(mode.q);
  mode.p *= sp / np;
  mode.q *= sq / nq;
  mode.scale *= sp * sq * np * nq;
  return mode;
}

template <class Scalar>
struct OrthogonalizeOutcome {
  RankOneMode<Scalar> mode;
  bool collapsed = false;
};

/// Gram-Schmidt of the new factors against the history factors in the mass
/// inner products. If either projection removes all but a 1e-10 fraction of
/// the factor's mass norm, the original mode is returned with `collapsed` set.
template <class Scalar>
OrthogonalizeOutcome<Scalar> orthogonalize_new_mode(const RankOneMode<Scalar>& mode,
                                                    const SeparableFunction<Scalar>& history) {
  const OperatorPair<Scalar>& x_ops = history.x_ops();
  const OperatorPair<Scalar>& y_ops = history.y_ops();
  if (history.rank() == 0) return {mode, false};

  constexpr double collapse_floor = 1e-10;
  VectorX<Scalar> p = mode.p;
  VectorX<Scalar> q = mode.q;
  const Scalar p_norm_before = std::sqrt(p.dot(x_ops.M * p));
  const Scalar q_norm_before = std::sqrt(q.dot(y_ops.M * q));
  for (const RankOneMode<Scalar>& m : history.modes()) {
    const Scalar mp = m.p.dot(x_ops.M * m.p);
    if (mp > Scalar(0)) p -= (m.p.dot(x_ops.M * p) / mp) * m.p;
    const Scalar mq = m.q.dot(y_ops.M * m.q);
    if (mq > Scalar(0)) q -= (m.q.dot(y_ops.M * q) / mq) * m.q;
  }
  const Scalar p_norm_after = std::sqrt(std::max(p.dot(x_ops.M * p), Scalar(0)));
  const Scalar q_norm_after = std::sqrt(std::max(q.dot(y_ops.M * q), Scalar(0)));
  if (p_norm_after < Scalar(collapse_floor) * p_norm_before ||
      q_norm_after < Scalar(collapse_floor) * q_norm_before) {
    return {mode, true};
  }
  return {RankOneMode<Scalar>{std::move(p), std::move(q), mode.scale}, false};
}

/// Energy a(u, u) by the bilinear extension of the rank-one identity,
/// pairwise over modes.
template <class Scalar>
Scalar separable_energy(const SeparableFunction<Scalar>& u) {
  const OperatorPair<Scalar>& x_ops = u.x_ops();
  const OperatorPair<Scalar>& y_ops = u.y_ops();
  Scalar energy = Scalar(0);
  for (const RankOneMode<Scalar>& l : u.modes()) {
    const VectorX<Scalar> axp = x_ops.A * l.p;
    const VectorX<Scalar> mxp = x_ops.M * l.p;
    const VectorX<Scalar> ayq = y_ops.A * l.q;
    const VectorX<Scalar> myq = y_ops.M * l.q;
    for (const RankOneMode<Scalar>& k : u.modes()) {
      energy += k.scale * l.scale *
                (k.p.dot(axp) * k.q.dot(myq) + k.p.dot(mxp) * k.q.dot(ayq));
    }
  }
  return energy;
}

/// Dense residual coefficient matrix F - K U (diagnostic scale; allocates the
/// full tensor).
template <class Scalar>
MatrixX<Scalar> dense_residual_matrix(const ResidualContraction<Scalar>& r) {
  const KroneckerSumOperator<Scalar> K(*r.x_ops, *r.y_ops);
  MatrixX<Scalar> R = r.load->dense();
  if (r.history->rank() > 0) R -= K.apply(r.history->dense());
  return R;
}

}  // namespace cfpgd
