#pragma once

#include "cfpgd/types.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace cfpgd {

/// Differentiation order of one coordinate direction.
///
/// Orders in (0,1) select the weighted first derivative x^{1-alpha} d/dx;
/// alpha = 1 is admitted and degenerates continuously to the classical
/// derivative (used for time coordinates). The weight is only ever evaluated
/// at points x > 0, so the ambiguity of the definition at x = 0 never enters.
template <class Scalar>
class FractionalOrder {
 public:
  explicit FractionalOrder(Scalar alpha) : alpha_(alpha) {
    if (!(alpha > Scalar(0)) || !(alpha <= Scalar(1))) {
      throw DomainError("FractionalOrder: alpha must lie in (0, 1], got " +
                        std::to_string(static_cast<double>(alpha)));
    }
  }

  Scalar alpha() const noexcept { return alpha_; }
  bool is_classical() const noexcept { return alpha_ == Scalar(1); }

  /// Exponent of the derivative weight x^{1-alpha}.
  Scalar weight_exponent() const noexcept { return Scalar(1) - alpha_; }

 private:
  Scalar alpha_;
};

/// One-dimensional mesh on [0, L] with homogeneous Dirichlet ends.
///
/// Nodes follow x_i = L (i/n)^gamma; gamma = 1 is the uniform mesh, gamma > 1
/// refines toward the left endpoint where the derivative weight degenerates.
template <class Scalar>
class Mesh1D {
 public:
  Mesh1D(VectorX<Scalar> nodes, Scalar grading_exponent)
      : nodes_(std::move(nodes)), grading_exponent_(grading_exponent) {
    const Index n = nodes_.size() - 1;
    if (n < 2) throw DomainError("Mesh1D: need at least 2 elements");
    if (!(grading_exponent_ >= Scalar(1))) {
      throw DomainError("Mesh1D: grading exponent must be >= 1");
    }
    if (nodes_[0] != Scalar(0)) throw DomainError("Mesh1D: mesh must start at 0");
    const Scalar L = nodes_[n];
    if (!(L > Scalar(0))) throw DomainError("Mesh1D: domain length must be positive");
    for (Index i = 1; i <= n; ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) {
        throw DomainError("Mesh1D: nodes must be strictly increasing");
      }
      const Scalar expected =
          L * std::pow(Scalar(i) / Scalar(n), grading_exponent_);
      if (std::abs(nodes_[i] - expected) > Scalar(1e-12) * L) {
        throw DomainError("Mesh1D: nodes do not match the stated grading");
      }
    }
  }

  const VectorX<Scalar>& nodes() const noexcept { return nodes_; }
  Scalar node(Index i) const { return nodes_[i]; }
  Index element_count() const noexcept { return nodes_.size() - 1; }
  Scalar element_length(Index e) const { return nodes_[e + 1] - nodes_[e]; }
  Scalar length() const { return nodes_[nodes_.size() - 1]; }
  Scalar grading_exponent() const noexcept { return grading_exponent_; }
  bool dirichlet_both_ends() const noexcept { return true; }

  /// Number of interior nodes (degrees of freedom with Dirichlet ends).
  Index interior_count() const noexcept { return nodes_.size() - 2; }

  bool is_uniform(Scalar rel_tol = Scalar(1e-12)) const {
    const Scalar h = length() / Scalar(element_count());
    for (Index e = 0; e < element_count(); ++e) {
      if (std::abs(element_length(e) - h) > rel_tol * h) return false;
    }
    return true;
  }

 private:
  VectorX<Scalar> nodes_;
  Scalar grading_exponent_;
};

template <class Scalar>
Mesh1D<Scalar> make_uniform_mesh(Scalar length, Index n_elements) {
  if (n_elements < 2) throw DomainError("make_uniform_mesh: need n >= 2");
  if (!(length > Scalar(0))) throw DomainError("make_uniform_mesh: need L > 0");
  VectorX<Scalar> nodes(n_elements + 1);
  for (Index i = 0; i <= n_elements; ++i) {
    nodes[i] = length * Scalar(i) / Scalar(n_elements);
  }
  return Mesh1D<Scalar>(std::move(nodes), Scalar(1));
}

template <class Scalar>
Mesh1D<Scalar> make_graded_mesh(Scalar length, Index n_elements, Scalar gamma) {
  if (n_elements < 2) throw DomainError("make_graded_mesh: need n >= 2");
  if (!(length > Scalar(0))) throw DomainError("make_graded_mesh: need L > 0");
  if (!(gamma >= Scalar(1))) throw DomainError("make_graded_mesh: need gamma >= 1");
  VectorX<Scalar> nodes(n_elements + 1);
  for (Index i = 0; i <= n_elements; ++i) {
    nodes[i] = length * std::pow(Scalar(i) / Scalar(n_elements), gamma);
  }
  return Mesh1D<Scalar>(std::move(nodes), gamma);
}

/// A coordinate direction: differentiation order, mesh, and a short label
/// ('x', 'y' or 't') used for reporting and matrix export.
template <class Scalar>
class FractionalInterval {
 public:
  FractionalInterval(FractionalOrder<Scalar> order, Mesh1D<Scalar> mesh, char label)
      : order_(order), mesh_(std::move(mesh)), label_(label) {}

  const FractionalOrder<Scalar>& order() const noexcept { return order_; }
  const Mesh1D<Scalar>& mesh() const noexcept { return mesh_; }
  char label() const noexcept { return label_; }
  Index interior_dof_count() const noexcept { return mesh_.interior_count(); }

 private:
  FractionalOrder<Scalar> order_;
  Mesh1D<Scalar> mesh_;
  char label_;
};

/// Weighted derivative value x^{1-alpha} f'(x) at an interior point x > 0.
template <class Scalar>
Scalar conformable_derivative_pointwise(Scalar f_prime_value, Scalar x,
                                        const FractionalOrder<Scalar>& order) {
  if (!(x > Scalar(0))) {
    throw DomainError("conformable_derivative_pointwise: requires x > 0");
  }
  if (order.is_classical()) return f_prime_value;
  return std::pow(x, order.weight_exponent()) * f_prime_value;
}

}  // namespace cfpgd
