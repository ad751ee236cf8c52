#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace cfpgd {

using Index = Eigen::Index;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using SparseMatrixX = Eigen::SparseMatrix<Scalar>;

/// An argument violated an operation's domain contract.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver stopped without reaching its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& message, double residual, Index iterations)
      : std::runtime_error(message), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  Index iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  Index iterations_;
};

}  // namespace cfpgd
