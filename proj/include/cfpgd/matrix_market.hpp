#pragma once

#include "cfpgd/types.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <tuple>
#include <vector>

namespace cfpgd {

/// MatrixMarket coordinate format: 1-based indices, sorted by row then
/// column, values with 17 significant digits.
template <class Scalar>
void write_matrix_market(std::ostream& os, const SparseMatrixX<Scalar>& S) {
  std::vector<std::tuple<Index, Index, Scalar>> entries;
  entries.reserve(S.nonZeros());
  for (Index k = 0; k < S.outerSize(); ++k) {
    for (typename SparseMatrixX<Scalar>::InnerIterator it(S, k); it; ++it) {
      entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << S.rows() << " " << S.cols() << " " << entries.size() << "\n";
  char buffer[64];
  for (const auto& [i, j, v] : entries) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", static_cast<double>(v));
    os << (i + 1) << " " << (j + 1) << " " << buffer << "\n";
  }
}

}  // namespace cfpgd
